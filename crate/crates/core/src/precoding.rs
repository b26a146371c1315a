//! Hybrid zero-forcing precoders.
//!
//! Centralized users get ZF computed from the stacked ML x K_c estimate of
//! all APs; distributed users get per-AP local ZF normalized to unit
//! expected power.

use nalgebra::{DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channels_for, ChannelDraw, ChannelStats};
use crate::error::{Error, Result};
use crate::rng;
use crate::C64;

/// Gram matrices with a larger condition estimate are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Partition of the served users. Positions within each list define the
/// column order of precoders, powers and `mu`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Grouping {
    pub centralized: Vec<usize>,
    pub distributed: Vec<usize>,
}

impl Grouping {
    pub fn new(centralized: Vec<usize>, distributed: Vec<usize>) -> Self {
        Self {
            centralized,
            distributed,
        }
    }

    pub fn k_c(&self) -> usize {
        self.centralized.len()
    }

    pub fn k_d(&self) -> usize {
        self.distributed.len()
    }

    pub fn num_served(&self) -> usize {
        self.k_c() + self.k_d()
    }

    /// Served users, centralized first.
    pub fn served(&self) -> impl Iterator<Item = usize> + '_ {
        self.centralized.iter().chain(&self.distributed).copied()
    }

    /// Checks disjointness, index range and the ZF rank caps
    /// `K_c <= M L` and `K_d <= L - 1`.
    pub fn validate(&self, num_users: usize, num_aps: usize, antennas: usize) -> Result<()> {
        let mut seen = vec![false; num_users];
        for k in self.served() {
            if k >= num_users {
                return Err(Error::InvalidGrouping(format!("user {k} out of range")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidGrouping(format!("user {k} listed twice")));
            }
        }
        if self.k_c() > num_aps * antennas {
            return Err(Error::InvalidGrouping(format!(
                "{} centralized users exceed M L = {}",
                self.k_c(),
                num_aps * antennas
            )));
        }
        if self.k_d() > 0 && self.k_d() >= antennas {
            return Err(Error::DistributedGroupTooLarge {
                k_d: self.k_d(),
                antennas,
            });
        }
        Ok(())
    }
}

/// Precoders of one group, one L x |group| matrix per AP. Column `i` of
/// `per_ap[m]` is the vector AP `m` uses for the `i`-th user of the group.
#[derive(Debug, Clone)]
pub struct ApPrecoders {
    pub per_ap: Vec<DMatrix<C64>>,
}

impl ApPrecoders {
    pub fn column(&self, ap: usize, i: usize) -> nalgebra::DVectorView<'_, C64> {
        self.per_ap[ap].column(i)
    }
}

/// Returns `A (A^H A)^{-1}` for a tall `A`, via Cholesky of the Gram matrix.
fn right_pseudo_inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let gram = a.adjoint() * a;
    let chol = gram.cholesky().ok_or(Error::SingularMatrix {
        condition: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0f64), |(lo, hi), d| {
        (lo.min(d.re), hi.max(d.re))
    });
    let condition = (hi / lo).powi(2);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularMatrix { condition });
    }
    Ok(a * chol.inverse())
}

/// Stacks the estimates of `users` from every AP into an ML x |users| matrix.
fn stacked_estimates(draw: &ChannelDraw, users: &[usize]) -> DMatrix<C64> {
    let l = draw.antennas();
    let mut out = DMatrix::zeros(l * draw.g_hat.len(), users.len());
    for (m, gm) in draw.g_hat.iter().enumerate() {
        for (i, &k) in users.iter().enumerate() {
            out.view_mut((m * l, i), (l, 1)).copy_from(&gm.column(k));
        }
    }
    out
}

fn ap_estimates(draw: &ChannelDraw, ap: usize, users: &[usize]) -> DMatrix<C64> {
    draw.g_hat[ap].select_columns(users)
}

/// Centralized ZF: `w_mk = E_m G (G^H G)^{-1} e_i` for the i-th centralized
/// user, where `G` stacks every AP's estimate of the centralized users and
/// `E_m` selects AP `m`'s rows.
pub fn centralized_zf(draw: &ChannelDraw, grouping: &Grouping) -> Result<ApPrecoders> {
    let l = draw.antennas();
    let m_aps = draw.g_hat.len();
    let users = &grouping.centralized;
    if users.is_empty() {
        return Ok(ApPrecoders {
            per_ap: vec![DMatrix::zeros(l, 0); m_aps],
        });
    }
    let w = right_pseudo_inverse(&stacked_estimates(draw, users))?;
    let per_ap = (0..m_aps).map(|m| w.rows(m * l, l).into_owned()).collect();
    Ok(ApPrecoders { per_ap })
}

/// Expected squared norm of an unnormalized local-ZF column,
/// `1 / ((L - K_d) gamma)`.
pub fn local_zf_expected_norm_sq(antennas: usize, k_d: usize, gamma: f64) -> f64 {
    1.0 / ((antennas - k_d) as f64 * gamma)
}

/// Local ZF at one AP for the distributed group, each column divided by the
/// square root of its expected squared norm.
pub fn local_zf(
    draw: &ChannelDraw,
    stats: &ChannelStats,
    grouping: &Grouping,
    ap: usize,
) -> Result<DMatrix<C64>> {
    let l = draw.antennas();
    let users = &grouping.distributed;
    if users.is_empty() {
        return Ok(DMatrix::zeros(l, 0));
    }
    if users.len() >= l {
        return Err(Error::DistributedGroupTooLarge {
            k_d: users.len(),
            antennas: l,
        });
    }
    let mut w = right_pseudo_inverse(&ap_estimates(draw, ap, users))?;
    for (j, &k) in users.iter().enumerate() {
        let norm = local_zf_expected_norm_sq(l, users.len(), stats.gamma[(ap, k)]).sqrt();
        w.column_mut(j).unscale_mut(norm);
    }
    Ok(w)
}

pub fn local_zf_all(
    draw: &ChannelDraw,
    stats: &ChannelStats,
    grouping: &Grouping,
) -> Result<ApPrecoders> {
    let per_ap = (0..draw.g_hat.len())
        .map(|m| local_zf(draw, stats, grouping, m))
        .collect::<Result<_>>()?;
    Ok(ApPrecoders { per_ap })
}

/// Monte Carlo estimate of `mu[m][i] = E{|w_mk|^2}` for centralized users.
#[derive(Debug, Clone)]
pub struct MuEstimate {
    /// M x K_c.
    pub mu: DMatrix<f64>,
    pub draws: usize,
    pub skipped: usize,
}

/// Averages `|w_mk|^2` over `n_draws` independent realizations. Singular
/// draws are skipped as long as they stay within 1% of the total.
pub fn estimate_mu(
    stats: &ChannelStats,
    grouping: &Grouping,
    antennas: usize,
    n_draws: usize,
    seed: u64,
) -> Result<MuEstimate> {
    if n_draws == 0 {
        return Err(Error::InvalidParams("n_draws must be at least 1".into()));
    }
    let m_aps = stats.num_aps();
    let k_c = grouping.k_c();
    let mut sum = DMatrix::<f64>::zeros(m_aps, k_c);
    let mut skipped = 0;
    if k_c > 0 {
        for n in 0..n_draws {
            let draw_seed = rng::derive_seed(seed, &[rng::MU, n as u64]);
            let draw = draw_channels_for(stats, antennas, draw_seed, &grouping.centralized);
            match centralized_zf(&draw, grouping) {
                Ok(w) => {
                    for (m, wm) in w.per_ap.iter().enumerate() {
                        for i in 0..k_c {
                            sum[(m, i)] += wm.column(i).norm_squared();
                        }
                    }
                }
                Err(Error::SingularMatrix { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let used = n_draws - skipped;
    if skipped > n_draws / 100 || used == 0 {
        return Err(Error::TooManySingularDraws {
            skipped,
            total: n_draws,
        });
    }
    Ok(MuEstimate {
        mu: sum / used as f64,
        draws: used,
        skipped,
    })
}

/// Selection matrix helper used by tests and the oracle: the `Dyn` row block
/// of AP `m` inside a stacked ML-vector.
pub fn ap_block(
    stacked: &nalgebra::DVector<C64>,
    ap: usize,
    antennas: usize,
) -> nalgebra::DVector<C64> {
    stacked
        .rows_generic(ap * antennas, Dyn(antennas))
        .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use nalgebra::{dmatrix, DVector};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn single_ap_draw(g_hat: DMatrix<C64>) -> ChannelDraw {
        ChannelDraw {
            g: vec![g_hat.clone()],
            g_err: vec![DMatrix::zeros(g_hat.nrows(), g_hat.ncols())],
            g_hat: vec![g_hat],
        }
    }

    #[test]
    fn single_user_pseudo_inverse() {
        let draw = single_ap_draw(DMatrix::from_column_slice(2, 1, &[c(1.0), c(0.0)]));
        let w = centralized_zf(&draw, &Grouping::new(vec![0], vec![])).unwrap();
        assert!((w.column(0, 0) - DVector::from_vec(vec![c(1.0), c(0.0)])).norm() < 1e-15);
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let col = [c(1.0), c(2.0)];
        let draw = single_ap_draw(DMatrix::from_iterator(
            2,
            2,
            col.iter().chain(&col).copied(),
        ));
        let g = Grouping::new(vec![0, 1], vec![]);
        assert!(matches!(
            centralized_zf(&draw, &g),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn local_zf_needs_spare_antenna() {
        let stats = ChannelStats::new(dmatrix![1.0, 2.0], 20, 0.5);
        let draw = draw_channels(&stats, 2, 3);
        let g = Grouping::new(vec![], vec![0, 1]);
        assert_eq!(
            local_zf(&draw, &stats, &g, 0).unwrap_err(),
            Error::DistributedGroupTooLarge {
                k_d: 2,
                antennas: 2
            }
        );
    }

    #[test]
    fn local_zf_single_user_direction() {
        // L = 2, K_d = 1, g_hat = (2, 0): w = g_hat / |g_hat|^2 * sqrt((L-1) gamma).
        let gamma = 0.7;
        let stats = ChannelStats {
            beta: dmatrix![1.0],
            gamma: dmatrix![gamma],
        };
        let draw = single_ap_draw(DMatrix::from_column_slice(2, 1, &[c(2.0), c(0.0)]));
        let w = local_zf(&draw, &stats, &Grouping::new(vec![], vec![0]), 0).unwrap();
        let expected = 0.5 * gamma.sqrt();
        assert!((w[(0, 0)].re - expected).abs() < 1e-15);
        assert_eq!(w[(1, 0)], c(0.0));
    }

    #[test]
    fn mu_single_draw_matches_that_draw() {
        let stats = ChannelStats::new(dmatrix![1.0, 2.0, 0.5; 0.3, 0.9, 4.0], 20, 0.5);
        let g = Grouping::new(vec![2, 0], vec![]);
        let est = estimate_mu(&stats, &g, 3, 1, 77).unwrap();
        let draw_seed = rng::derive_seed(77, &[rng::MU, 0]);
        let draw = draw_channels_for(&stats, 3, draw_seed, &g.centralized);
        let w = centralized_zf(&draw, &g).unwrap();
        for m in 0..2 {
            for i in 0..2 {
                assert_eq!(est.mu[(m, i)], w.column(m, i).norm_squared());
            }
        }
    }

    #[test]
    fn grouping_validation() {
        assert!(Grouping::new(vec![0, 1], vec![2]).validate(3, 1, 2).is_ok());
        assert!(Grouping::new(vec![0], vec![0]).validate(3, 1, 4).is_err());
        assert!(Grouping::new(vec![5], vec![]).validate(3, 1, 4).is_err());
        assert!(Grouping::new(vec![0, 1, 2], vec![])
            .validate(3, 1, 2)
            .is_err());
        assert!(Grouping::new(vec![], vec![0, 1]).validate(3, 1, 2).is_err());
    }

    #[test]
    fn ap_block_extracts_rows() {
        let v = DVector::from_iterator(6, (0..6).map(|i| c(i as f64)));
        assert_eq!(
            ap_block(&v, 1, 3),
            DVector::from_vec(vec![c(3.0), c(4.0), c(5.0)])
        );
    }
}
