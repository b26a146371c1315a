//! MMSE channel-estimate statistics and small-scale realizations.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng;
use crate::C64;

/// Large-scale statistics seen by every AP: gains `beta` and MMSE estimate
/// variances `gamma`, both M x K.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub beta: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
}

impl ChannelStats {
    pub fn new(beta: DMatrix<f64>, tau_u: usize, rho_u: f64) -> Self {
        let gamma = compute_gamma(&beta, tau_u, rho_u);
        Self { beta, gamma }
    }

    /// Stats with `gamma == beta`, i.e. error-free estimates.
    pub fn perfect_csi(beta: DMatrix<f64>) -> Self {
        Self {
            gamma: beta.clone(),
            beta,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.beta.ncols()
    }
}

/// `gamma = tau_u rho_u beta^2 / (tau_u rho_u beta + 1)`, element-wise.
pub fn compute_gamma(beta: &DMatrix<f64>, tau_u: usize, rho_u: f64) -> DMatrix<f64> {
    let snr = tau_u as f64 * rho_u;
    beta.map(|b| {
        let b = b.max(0.0);
        snr * b * b / (snr * b + 1.0)
    })
}

/// One small-scale realization. `g_hat[m]` is the L x K estimate matrix at
/// AP `m` (column k is user k); `g_err[m]` the estimation error and `g[m]`
/// the true channel.
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    pub g: Vec<DMatrix<C64>>,
    pub g_hat: Vec<DMatrix<C64>>,
    pub g_err: Vec<DMatrix<C64>>,
}

impl ChannelDraw {
    pub fn antennas(&self) -> usize {
        self.g_hat.first().map_or(0, |m| m.nrows())
    }
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Draws estimates and errors for every user.
pub fn draw_channels(stats: &ChannelStats, antennas: usize, seed: u64) -> ChannelDraw {
    let all: Vec<usize> = (0..stats.num_users()).collect();
    draw_channels_for(stats, antennas, seed, &all)
}

/// Draws only the listed users; other columns stay zero. Each user has its
/// own substream, so the realization of user `k` does not depend on which
/// other users are drawn alongside it.
pub fn draw_channels_for(
    stats: &ChannelStats,
    antennas: usize,
    seed: u64,
    users: &[usize],
) -> ChannelDraw {
    let (m_aps, k_users) = (stats.num_aps(), stats.num_users());
    let zeros = || vec![DMatrix::<C64>::zeros(antennas, k_users); m_aps];
    let (mut g_hat, mut g_err) = (zeros(), zeros());
    for &k in users {
        let mut rng = rng::rng_for(seed, &[rng::CHANNEL, k as u64]);
        for m in 0..m_aps {
            let var_hat = stats.gamma[(m, k)];
            let var_err = (stats.beta[(m, k)] - var_hat).max(0.0);
            for l in 0..antennas {
                g_hat[m][(l, k)] = complex_normal(&mut rng, var_hat);
            }
            for l in 0..antennas {
                g_err[m][(l, k)] = complex_normal(&mut rng, var_err);
            }
        }
    }
    let g = g_hat.iter().zip(&g_err).map(|(h, e)| h + e).collect();
    ChannelDraw { g, g_hat, g_err }
}
