//! Brute-force Monte Carlo counterpart of the closed-form SINRs.
//!
//! Every draw regenerates channels, rebuilds both precoders, and records the
//! effective gains `a_kt = sum_m sqrt(eta_mt) g_mk^H w_mt`. The
//! use-and-then-forget SINR is then
//! `|E a_kk|^2 / (Var a_kk + sum_{t != k} E|a_kt|^2 + 1)`.
//!
//! Draws are processed in fixed blocks that run in parallel and are merged in
//! block order, so results do not depend on the thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{draw_channels_for, ChannelStats};
use crate::error::{Error, Result};
use crate::precoding::{centralized_zf, local_zf_all, ApPrecoders, Grouping};
use crate::rng;
use crate::se::PowerAllocation;
use crate::C64;

const BLOCK: usize = 256;

/// Streaming mean and variance of a complex sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: f64,
    mean: C64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: C64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += (d * (x - self.mean).conj()).re;
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * (other.n / n);
        self.m2 += other.m2 + delta.norm_sqr() * self.n * other.n / n;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    pub fn mean(&self) -> C64 {
        self.mean
    }

    /// Population variance `E|x - E x|^2`.
    pub fn variance(&self) -> f64 {
        if self.n == 0.0 {
            0.0
        } else {
            self.m2 / self.n
        }
    }

    pub fn second_moment(&self) -> f64 {
        self.variance() + self.mean.norm_sqr()
    }
}

#[derive(Debug, Clone)]
pub struct OracleSinr {
    /// Served order, centralized first.
    pub sinr: Vec<f64>,
    /// `Var a_kk` per served user.
    pub desired_variance: Vec<f64>,
    /// `E|w_mk|^2` of the centralized precoders over the oracle's own draws.
    pub mu: DMatrix<f64>,
    pub draws: usize,
    pub skipped: usize,
}

struct Draw {
    g: Vec<DMatrix<C64>>,
    wc: ApPrecoders,
    wd: ApPrecoders,
}

fn draw(
    stats: &ChannelStats,
    grouping: &Grouping,
    antennas: usize,
    seed: u64,
) -> Result<Option<Draw>> {
    let served: Vec<usize> = grouping.served().collect();
    let ch = draw_channels_for(stats, antennas, seed, &served);
    let precoders =
        centralized_zf(&ch, grouping).and_then(|wc| Ok((wc, local_zf_all(&ch, stats, grouping)?)));
    match precoders {
        Ok((wc, wd)) => Ok(Some(Draw { g: ch.g, wc, wd })),
        Err(Error::SingularMatrix { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_skips(skipped: usize, total: usize) -> Result<()> {
    if skipped > total / 100 || skipped == total {
        return Err(Error::TooManySingularDraws { skipped, total });
    }
    Ok(())
}

/// Runs `body` over `n_draws` usable-or-skipped draws in parallel blocks and
/// merges block results in order.
fn blocked<A, F, M>(n_draws: usize, init: impl Fn() -> A + Sync, body: F, merge: M) -> Result<A>
where
    A: Send,
    F: Fn(&mut A, usize) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let blocks: Vec<A> = (0..n_draws.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for n in b * BLOCK..((b + 1) * BLOCK).min(n_draws) {
                body(&mut acc, n)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = init();
    for b in blocks {
        merge(&mut total, b);
    }
    Ok(total)
}

/// Monte Carlo use-and-then-forget SINR of every served user.
pub fn mc_uatf_sinr(
    stats: &ChannelStats,
    grouping: &Grouping,
    alloc: &PowerAllocation,
    antennas: usize,
    n_draws: usize,
    seed: u64,
) -> Result<OracleSinr> {
    let (m_aps, kc) = (stats.num_aps(), grouping.k_c());
    let served: Vec<usize> = grouping.served().collect();
    let ns = served.len();

    struct Acc {
        gains: Vec<Welford>,
        mu: DMatrix<f64>,
        used: usize,
        skipped: usize,
    }
    let init = || Acc {
        gains: vec![Welford::default(); ns * ns],
        mu: DMatrix::zeros(m_aps, kc),
        used: 0,
        skipped: 0,
    };
    let body = |acc: &mut Acc, n: usize| -> Result<()> {
        let Some(d) = draw(
            stats,
            grouping,
            antennas,
            rng::derive_seed(seed, &[rng::ORACLE, n as u64]),
        )?
        else {
            acc.skipped += 1;
            return Ok(());
        };
        acc.used += 1;
        for m in 0..m_aps {
            for i in 0..kc {
                acc.mu[(m, i)] += d.wc.column(m, i).norm_squared();
            }
        }
        for (r, &k) in served.iter().enumerate() {
            for t in 0..ns {
                let mut a = C64::new(0.0, 0.0);
                for m in 0..m_aps {
                    let g = d.g[m].column(k);
                    a += if t < kc {
                        g.dotc(&d.wc.column(m, t)) * alloc.eta_c[t].sqrt()
                    } else {
                        let j = t - kc;
                        g.dotc(&d.wd.column(m, j)) * alloc.eta_d[(m, j)].sqrt()
                    };
                }
                acc.gains[r * ns + t].push(a);
            }
        }
        Ok(())
    };
    let merge = |total: &mut Acc, b: Acc| {
        for (x, y) in total.gains.iter_mut().zip(&b.gains) {
            x.merge(y);
        }
        total.mu += b.mu;
        total.used += b.used;
        total.skipped += b.skipped;
    };
    let acc = blocked(n_draws, init, body, merge)?;
    check_skips(acc.skipped, n_draws)?;

    let mut sinr = Vec::with_capacity(ns);
    let mut desired_variance = Vec::with_capacity(ns);
    for r in 0..ns {
        let own = &acc.gains[r * ns + r];
        let leak: f64 = (0..ns)
            .filter(|&t| t != r)
            .map(|t| acc.gains[r * ns + t].second_moment())
            .sum();
        sinr.push(own.mean().norm_sqr() / (own.variance() + leak + 1.0));
        desired_variance.push(own.variance());
    }
    Ok(OracleSinr {
        sinr,
        desired_variance,
        mu: acc.mu / acc.used as f64,
        draws: acc.used,
        skipped: acc.skipped,
    })
}

/// Monte Carlo mean of `|s_m|^2` per AP with unit-modulus random-phase
/// symbols.
pub fn mc_ap_power(
    stats: &ChannelStats,
    grouping: &Grouping,
    alloc: &PowerAllocation,
    antennas: usize,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (m_aps, kc, kd) = (stats.num_aps(), grouping.k_c(), grouping.k_d());
    let init = || (vec![0.0; m_aps], 0usize, 0usize);
    let body = |acc: &mut (Vec<f64>, usize, usize), n: usize| -> Result<()> {
        let s = rng::derive_seed(seed, &[rng::ORACLE, n as u64]);
        let Some(d) = draw(stats, grouping, antennas, s)? else {
            acc.2 += 1;
            return Ok(());
        };
        acc.1 += 1;
        let mut sym = rng::rng_for(s, &[rng::ORACLE]);
        let q: Vec<C64> = (0..kc + kd)
            .map(|_| C64::from_polar(1.0, sym.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        for m in 0..m_aps {
            let mut x = nalgebra::DVector::<C64>::zeros(antennas);
            for i in 0..kc {
                x += d.wc.column(m, i) * (q[i] * alloc.eta_c[i].sqrt());
            }
            for j in 0..kd {
                x += d.wd.column(m, j) * (q[kc + j] * alloc.eta_d[(m, j)].sqrt());
            }
            acc.0[m] += x.norm_squared();
        }
        Ok(())
    };
    let merge = |t: &mut (Vec<f64>, usize, usize), b: (Vec<f64>, usize, usize)| {
        for (x, y) in t.0.iter_mut().zip(&b.0) {
            *x += y;
        }
        t.1 += b.1;
        t.2 += b.2;
    };
    let (sum, used, skipped) = blocked(n_draws, init, body, merge)?;
    check_skips(skipped, n_draws)?;
    Ok(sum.into_iter().map(|p| p / used as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<C64> = (0..50)
            .map(|i| C64::new((i as f64 * 0.7).sin() * 3.0, (i as f64).sqrt()))
            .collect();
        let mean = xs.iter().sum::<C64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / xs.len() as f64;
        let mut a = Welford::default();
        let mut b = Welford::default();
        for (i, &x) in xs.iter().enumerate() {
            if i < 17 {
                a.push(x)
            } else {
                b.push(x)
            }
        }
        a.merge(&b);
        assert_eq!(a.count(), 50);
        assert!((a.mean() - mean).norm() < 1e-12);
        assert!((a.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let stats = ChannelStats::new(dmatrix![2.0, 1.0, 0.5; 0.3, 1.5, 2.5], 20, 0.5);
        let g = Grouping::new(vec![0], vec![1, 2]);
        let zero = PowerAllocation::zeros(2, &g);
        let out = mc_uatf_sinr(&stats, &g, &zero, 4, 64, 1).unwrap();
        assert!(out.sinr.iter().all(|&s| s == 0.0));
        let p = mc_ap_power(&stats, &g, &zero, 4, 64, 1).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn centralized_desired_gain_is_deterministic_under_perfect_csi() {
        let stats = ChannelStats::perfect_csi(dmatrix![2.0, 1.0; 0.3, 1.5]);
        let g = Grouping::new(vec![0, 1], vec![]);
        let alloc = PowerAllocation::uniform(2, &g, 0.5);
        let out = mc_uatf_sinr(&stats, &g, &alloc, 3, 300, 2).unwrap();
        for v in out.desired_variance {
            assert!(v < 1e-20);
        }
        for s in out.sinr {
            assert!((s - 0.5).abs() < 1e-9);
        }
    }
}
