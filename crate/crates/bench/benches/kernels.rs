use criterion::{black_box, criterion_group, criterion_main, Criterion};

use cfmimo_bench::fixture;
use cfmimo_core::channel::draw_channels;
use cfmimo_core::power::{epa, solve_sca, ScaSettings};
use cfmimo_core::precoding::{centralized_zf, estimate_mu, local_zf_all};

fn precoders(c: &mut Criterion) {
    let f = fixture(8, 6, 1);
    let l = f.params.antennas;
    let draw = draw_channels(&f.stats, l, 11);
    c.bench_function("centralized_zf 20x14 K_c=8", |b| {
        b.iter(|| centralized_zf(black_box(&draw), &f.grouping).unwrap())
    });
    c.bench_function("local_zf_all 20 APs K_d=6", |b| {
        b.iter(|| local_zf_all(black_box(&draw), &f.stats, &f.grouping).unwrap())
    });
}

fn mu(c: &mut Criterion) {
    let f = fixture(8, 6, 1);
    let mut g = c.benchmark_group("estimate_mu");
    g.sample_size(10);
    g.bench_function("300 draws K_c=8", |b| {
        b.iter(|| estimate_mu(&f.stats, &f.grouping, f.params.antennas, 300, 5).unwrap())
    });
    g.finish();
}

fn sca(c: &mut Criterion) {
    let f = fixture(4, 6, 2);
    let m = f.params.num_aps;
    let mu = estimate_mu(&f.stats, &f.grouping, f.params.antennas, 300, 5)
        .unwrap()
        .mu;
    let init = epa(m, &f.grouping, &mu, f.params.rho);
    let settings = ScaSettings::default();
    let mut g = c.benchmark_group("sca");
    g.sample_size(10);
    g.bench_function("K_c=4 K_d=6 from EPA", |b| {
        b.iter(|| {
            solve_sca(
                &f.stats,
                &f.grouping,
                &mu,
                &f.params,
                &f.fp,
                &init,
                &settings,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, precoders, mu, sca);
criterion_main!(benches);
