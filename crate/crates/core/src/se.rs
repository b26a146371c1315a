//! Closed-form downlink SINR and spectral efficiency under the
//! use-and-then-forget bound, evaluated from large-scale quantities only.

use nalgebra::{DMatrix, DVector};

use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::fronthaul::{self, BitRate, FronthaulParams};
use crate::precoding::Grouping;
use crate::scenario::SystemParams;

/// Relative slack on the per-AP power budget and absolute slack on QoS
/// when flagging feasibility.
pub const POWER_SLACK: f64 = 1e-6;
pub const QOS_SLACK: f64 = 1e-6;

/// Power control coefficients. `eta_c[i]` belongs to the i-th centralized
/// user and is shared by every AP; `eta_d[(m, j)]` is AP `m`'s coefficient
/// for the j-th distributed user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub eta_c: DVector<f64>,
    pub eta_d: DMatrix<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_aps: usize, grouping: &Grouping) -> Self {
        Self {
            eta_c: DVector::zeros(grouping.k_c()),
            eta_d: DMatrix::zeros(num_aps, grouping.k_d()),
        }
    }

    pub fn uniform(num_aps: usize, grouping: &Grouping, value: f64) -> Self {
        Self {
            eta_c: DVector::from_element(grouping.k_c(), value),
            eta_d: DMatrix::from_element(num_aps, grouping.k_d(), value),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            eta_c: &self.eta_c * factor,
            eta_d: &self.eta_d * factor,
        }
    }

    /// Expected transmit power of each AP,
    /// `sum_c eta_c mu_mk + sum_d eta_d_mk`.
    pub fn ap_loads(&self, mu: &DMatrix<f64>) -> Vec<f64> {
        let centralized = mu * &self.eta_c;
        (0..self.eta_d.nrows().max(mu.nrows()))
            .map(|m| {
                let c = if centralized.is_empty() {
                    0.0
                } else {
                    centralized[m]
                };
                let d = if self.eta_d.ncols() == 0 {
                    0.0
                } else {
                    self.eta_d.row(m).sum()
                };
                c + d
            })
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.eta_c
            .iter()
            .chain(self.eta_d.iter())
            .all(|&e| e >= 0.0)
    }
}

/// Interference seen by receiver `k`, split into the centralized and
/// distributed contributions; `weight_c` / `weight_d` pick which of
/// `beta` or `beta - gamma` multiplies each AP's load.
fn interference(
    stats: &ChannelStats,
    k: usize,
    load_c: &[f64],
    load_d: &[f64],
    centralized_receiver: bool,
) -> f64 {
    let mut total = 0.0;
    for m in 0..stats.num_aps() {
        let beta = stats.beta[(m, k)];
        let err = beta - stats.gamma[(m, k)];
        let (wc, wd) = if centralized_receiver {
            (err, beta)
        } else {
            (beta, err)
        };
        total += load_c[m] * wc + load_d[m] * wd;
    }
    total
}

fn group_loads(mu: &DMatrix<f64>, alloc: &PowerAllocation, num_aps: usize) -> (Vec<f64>, Vec<f64>) {
    let load_c = (0..num_aps)
        .map(|m| {
            if alloc.eta_c.is_empty() {
                0.0
            } else {
                mu.row(m)
                    .iter()
                    .zip(alloc.eta_c.iter())
                    .map(|(u, e)| u * e)
                    .sum()
            }
        })
        .collect();
    let load_d = (0..num_aps)
        .map(|m| {
            if alloc.eta_d.ncols() == 0 {
                0.0
            } else {
                alloc.eta_d.row(m).sum()
            }
        })
        .collect();
    (load_c, load_d)
}

/// SINR of the `i`-th centralized user:
/// `eta_k / (sum_t eta_t sum_m mu_mt (beta_mk - gamma_mk) + sum_t sum_m eta_mt beta_mk + 1)`.
pub fn sinr_centralized(
    i: usize,
    stats: &ChannelStats,
    grouping: &Grouping,
    mu: &DMatrix<f64>,
    alloc: &PowerAllocation,
) -> f64 {
    let (load_c, load_d) = group_loads(mu, alloc, stats.num_aps());
    let k = grouping.centralized[i];
    alloc.eta_c[i] / (interference(stats, k, &load_c, &load_d, true) + 1.0)
}

/// SINR of the `j`-th distributed user:
/// `(L - K_d) (sum_m sqrt(eta_mk gamma_mk))^2 / (sum_t eta_t sum_m mu_mt beta_mk
///  + sum_t sum_m eta_mt (beta_mk - gamma_mk) + 1)`.
pub fn sinr_distributed(
    j: usize,
    stats: &ChannelStats,
    grouping: &Grouping,
    antennas: usize,
    mu: &DMatrix<f64>,
    alloc: &PowerAllocation,
) -> Result<f64> {
    let k_d = grouping.k_d();
    if antennas <= k_d {
        return Err(Error::DistributedGroupTooLarge { k_d, antennas });
    }
    let (load_c, load_d) = group_loads(mu, alloc, stats.num_aps());
    Ok(distributed_from_loads(
        j, stats, grouping, antennas, alloc, &load_c, &load_d,
    ))
}

fn distributed_from_loads(
    j: usize,
    stats: &ChannelStats,
    grouping: &Grouping,
    antennas: usize,
    alloc: &PowerAllocation,
    load_c: &[f64],
    load_d: &[f64],
) -> f64 {
    let k = grouping.distributed[j];
    let coherent: f64 = (0..stats.num_aps())
        .map(|m| (alloc.eta_d[(m, j)] * stats.gamma[(m, k)]).sqrt())
        .sum();
    let gain = (antennas - grouping.k_d()) as f64;
    gain * coherent * coherent / (interference(stats, k, load_c, load_d, false) + 1.0)
}

/// All SINRs in served order (centralized users first).
pub fn all_sinrs(
    stats: &ChannelStats,
    grouping: &Grouping,
    antennas: usize,
    mu: &DMatrix<f64>,
    alloc: &PowerAllocation,
) -> Result<Vec<f64>> {
    let k_d = grouping.k_d();
    if k_d > 0 && antennas <= k_d {
        return Err(Error::DistributedGroupTooLarge { k_d, antennas });
    }
    let (load_c, load_d) = group_loads(mu, alloc, stats.num_aps());
    let mut out = Vec::with_capacity(grouping.num_served());
    for (i, &k) in grouping.centralized.iter().enumerate() {
        out.push(alloc.eta_c[i] / (interference(stats, k, &load_c, &load_d, true) + 1.0));
    }
    for j in 0..k_d {
        out.push(distributed_from_loads(
            j, stats, grouping, antennas, alloc, &load_c, &load_d,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeReport {
    /// Served users, centralized first; indexes the per-user vectors below.
    pub users: Vec<usize>,
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub sum_se: f64,
    pub prelog: f64,
    pub qos_met: bool,
    pub power_ok: bool,
    pub fronthaul_ok: bool,
    pub feasible: bool,
    /// Fronthaul load of every AP.
    pub fh_used: Vec<BitRate>,
}

impl SeReport {
    pub fn min_se(&self) -> f64 {
        self.se.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_fh_used(&self) -> BitRate {
        self.fh_used.iter().copied().max().unwrap_or_default()
    }
}

pub fn se_from_sinr(prelog: f64, sinr: f64) -> f64 {
    prelog * (1.0 + sinr).log2()
}

/// Per-user SE, their sum, and the QoS / power / fronthaul checks.
pub fn sum_se(
    stats: &ChannelStats,
    grouping: &Grouping,
    mu: &DMatrix<f64>,
    alloc: &PowerAllocation,
    params: &SystemParams,
    fp: &FronthaulParams,
) -> Result<SeReport> {
    let sinr = all_sinrs(stats, grouping, params.antennas, mu, alloc)?;
    let prelog = params.prelog();
    let se: Vec<f64> = sinr.iter().map(|&s| se_from_sinr(prelog, s)).collect();
    let qos_met = se.iter().enumerate().all(|(n, &s)| {
        let target = if n < grouping.k_c() {
            params.qos_c
        } else {
            params.qos_d
        };
        s >= target - QOS_SLACK
    });
    let power_ok = alloc.is_nonnegative()
        && alloc
            .ap_loads(mu)
            .iter()
            .all(|&p| p <= params.rho * (1.0 + POWER_SLACK));
    let load = fronthaul::fronthaul_load(grouping.k_c(), grouping.k_d(), fp);
    let fronthaul_ok = load <= BitRate::from_bps(params.fh_max);
    Ok(SeReport {
        users: grouping.served().collect(),
        sum_se: se.iter().sum(),
        sinr,
        se,
        prelog,
        qos_met,
        power_ok,
        fronthaul_ok,
        feasible: qos_met && power_ok && fronthaul_ok,
        fh_used: vec![load; stats.num_aps()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn single_centralized_user_perfect_csi() {
        let stats = ChannelStats::perfect_csi(dmatrix![2.0; 3.0]);
        let g = Grouping::new(vec![0], vec![]);
        let alloc = PowerAllocation::uniform(2, &g, 0.37);
        let mu = dmatrix![0.1; 0.2];
        assert!(close(sinr_centralized(0, &stats, &g, &mu, &alloc), 0.37));
        let zero = PowerAllocation::zeros(2, &g);
        assert_eq!(sinr_centralized(0, &stats, &g, &mu, &zero), 0.0);
    }

    #[test]
    fn single_distributed_user() {
        let (beta, gamma, eta) = (2.0, 1.5, 0.8);
        let stats = ChannelStats {
            beta: dmatrix![beta],
            gamma: dmatrix![gamma],
        };
        let g = Grouping::new(vec![], vec![0]);
        let alloc = PowerAllocation::uniform(1, &g, eta);
        let mu = DMatrix::zeros(1, 0);
        let s = sinr_distributed(0, &stats, &g, 2, &mu, &alloc).unwrap();
        assert!(close(s, eta * gamma / (eta * (beta - gamma) + 1.0)));

        let perfect = ChannelStats::perfect_csi(dmatrix![beta]);
        let s = sinr_distributed(0, &perfect, &g, 5, &mu, &alloc).unwrap();
        assert!(close(s, 4.0 * eta * beta));

        assert!(sinr_distributed(0, &stats, &g, 1, &mu, &alloc).is_err());
    }

    #[test]
    fn prelog_and_unit_sinr() {
        let params = SystemParams {
            num_aps: 1,
            num_users: 1,
            antennas: 2,
            ..SystemParams::reference()
        };
        assert!(close(params.prelog(), 0.99));
        assert!(close(se_from_sinr(params.prelog(), 1.0), 0.99));
    }

    #[test]
    fn report_sums_per_user_values() {
        let stats = ChannelStats::new(dmatrix![2.0, 0.5, 1.0; 1.0, 3.0, 0.2], 20, 0.5);
        let g = Grouping::new(vec![0], vec![1, 2]);
        let mu = dmatrix![0.05; 0.07];
        let alloc = PowerAllocation {
            eta_c: nalgebra::dvector![3.0],
            eta_d: dmatrix![0.2, 0.3; 0.1, 0.4],
        };
        let params = SystemParams {
            num_aps: 2,
            num_users: 3,
            antennas: 4,
            ..SystemParams::reference()
        };
        let fp = FronthaulParams::reference(4);
        let r = sum_se(&stats, &g, &mu, &alloc, &params, &fp).unwrap();
        let c = sinr_centralized(0, &stats, &g, &mu, &alloc);
        let d1 = sinr_distributed(0, &stats, &g, 4, &mu, &alloc).unwrap();
        let d2 = sinr_distributed(1, &stats, &g, 4, &mu, &alloc).unwrap();
        let expected = [c, d1, d2]
            .iter()
            .map(|&s| se_from_sinr(0.99, s))
            .sum::<f64>();
        assert!(close(r.sum_se, expected));
        assert_eq!(r.users, vec![0, 1, 2]);
        assert!(r.power_ok);

        // Hand-evaluated interference for the centralized receiver (user 0).
        let gam = &stats.gamma;
        let denom = 3.0 * (0.05 * (2.0 - gam[(0, 0)]) + 0.07 * (1.0 - gam[(1, 0)]))
            + (0.2 + 0.3) * 2.0
            + (0.1 + 0.4) * 1.0
            + 1.0;
        assert!(close(c, 3.0 / denom));
    }

    #[test]
    fn ap_loads() {
        let alloc = PowerAllocation {
            eta_c: nalgebra::dvector![1.0, 2.0],
            eta_d: dmatrix![0.5; 0.25],
        };
        let mu = dmatrix![0.1, 0.2; 0.3, 0.4];
        let loads = alloc.ap_loads(&mu);
        assert!(close(loads[0], 0.1 + 0.4 + 0.5));
        assert!(close(loads[1], 0.3 + 0.8 + 0.25));
    }
}
