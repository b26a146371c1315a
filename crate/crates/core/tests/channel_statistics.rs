use cfmimo_core::channel::{draw_channels, ChannelStats};
use cfmimo_core::scenario::generate_drop;
use cfmimo_core::{SystemParams, C64};

/// Hata-COST231 constant for 1.9 GHz, 15 m APs and 1.65 m users.
const HATA_L_DB: f64 = 140.7;
const NOISE_DBM: f64 = -92.0;

fn reference_loss_db(d_m: f64) -> f64 {
    let km = d_m / 1000.0;
    if d_m > 50.0 {
        -HATA_L_DB - 35.0 * km.log10()
    } else if d_m > 10.0 {
        -HATA_L_DB - 15.0 * 0.05f64.log10() - 20.0 * km.log10()
    } else {
        -HATA_L_DB - 15.0 * 0.05f64.log10() - 20.0 * 0.01f64.log10()
    }
}

fn torus(a: [f64; 2], b: [f64; 2], side: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        let d = (a[i] - b[i]).abs();
        let d = if d > side / 2.0 { side - d } else { d };
        s += d * d;
    }
    s.sqrt()
}

#[test]
fn large_scale_gain_follows_three_slope_model_with_shadowing() {
    let p = SystemParams::reference();
    let mut far = Vec::new();
    let mut near_err: f64 = 0.0;
    for seed in 0..40 {
        let s = generate_drop(&p, seed);
        for (m, ap) in s.ap_positions.iter().enumerate() {
            for (k, ue) in s.user_positions.iter().enumerate() {
                let d = torus(*ap, *ue, p.area_side).max(1.0);
                let db = 10.0 * s.beta[(m, k)].log10() + NOISE_DBM - 30.0;
                let r = db - reference_loss_db(d);
                if d > 50.0 {
                    far.push(r);
                } else {
                    near_err = near_err.max(r.abs());
                }
            }
        }
    }
    // Hata constant is quoted to 0.1 dB.
    assert!(near_err < 0.06, "{near_err}");
    far.sort_by(f64::total_cmp);
    let median = far[far.len() / 2];
    let mean = far.iter().sum::<f64>() / far.len() as f64;
    let sd = (far.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / far.len() as f64).sqrt();
    assert!(median.abs() < 0.4, "median shadowing {median} dB");
    assert!((sd - 8.0).abs() < 0.3, "shadowing spread {sd} dB");
}

#[test]
fn estimates_have_mmse_variances_and_are_uncorrelated_with_errors() {
    let p = SystemParams {
        num_aps: 3,
        num_users: 4,
        antennas: 4,
        ..SystemParams::reference()
    };
    let stats = ChannelStats::new(generate_drop(&p, 3).beta, p.tau_u, p.rho_u);
    let n = 20_000;
    let (mut hat, mut err) = (vec![0.0; 12], vec![0.0; 12]);
    let mut cross = vec![C64::new(0.0, 0.0); 12];
    for s in 0..n {
        let d = draw_channels(&stats, p.antennas, s);
        for m in 0..3 {
            for k in 0..4 {
                let i = m * 4 + k;
                hat[i] += d.g_hat[m].column(k).norm_squared();
                err[i] += d.g_err[m].column(k).norm_squared();
                cross[i] += d.g_hat[m].column(k).dotc(&d.g_err[m].column(k));
                let total = &d.g_hat[m].column(k) + &d.g_err[m].column(k);
                assert!(
                    (total - d.g[m].column(k)).norm() <= 1e-12 * d.g[m].column(k).norm().max(1.0)
                );
            }
        }
    }
    let scale = (n * p.antennas as u64) as f64;
    for m in 0..3 {
        for k in 0..4 {
            let i = m * 4 + k;
            let (b, g) = (stats.beta[(m, k)], stats.gamma[(m, k)]);
            // Relative std of a mean of 2 n L exponential halves is about 0.5%.
            assert!((hat[i] / scale / g - 1.0).abs() < 0.03);
            assert!((err[i] / scale / (b - g) - 1.0).abs() < 0.03);
            assert!(cross[i].norm() / scale < 0.03 * (g * (b - g)).sqrt());
        }
    }
}
