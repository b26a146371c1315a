//! eCPRI fronthaul accounting between the baseband high and low units.
//!
//! Each AP's link carries `(K_c + K_d) alpha1` of data symbols plus
//! `K_c alpha2` of centralized precoding weights. Rates are held as whole
//! bits per second so comparisons are exact.

use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct BitRate(pub u64);

impl BitRate {
    pub const ZERO: BitRate = BitRate(0);

    /// Rounds to the nearest bit/s; negative values clamp to zero.
    pub fn from_bps(bps: f64) -> Self {
        BitRate(bps.max(0.0).round() as u64)
    }

    pub fn from_gbps(gbps: f64) -> Self {
        Self::from_bps(gbps * 1e9)
    }

    pub fn bps(self) -> u64 {
        self.0
    }

    pub fn gbps(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl Add for BitRate {
    type Output = BitRate;
    fn add(self, rhs: BitRate) -> BitRate {
        BitRate(self.0 + rhs.0)
    }
}

impl Mul<usize> for BitRate {
    type Output = BitRate;
    fn mul(self, n: usize) -> BitRate {
        BitRate(self.0 * n as u64)
    }
}

impl fmt::Display for BitRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bit/s", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FronthaulParams {
    /// Modulation cardinality, a power of two.
    pub modulation_order: u32,
    pub n_subcarriers: u32,
    /// OFDM symbols per slot.
    pub n_ofdm: u32,
    pub ecpri_eff: f64,
    /// Data transmit delay, seconds.
    pub delay_data: f64,
    /// Precoding-weight transmit delay, seconds.
    pub delay_pr: f64,
    /// Quantization bits per real weight component.
    pub n_bits: u32,
    /// Precoding granularity.
    pub n_gran: u32,
    pub antennas: u32,
}

impl Default for FronthaulParams {
    fn default() -> Self {
        Self::reference(14)
    }
}

impl FronthaulParams {
    /// 64-QAM over 3264 subcarriers, 16-bit weights, for `antennas` per AP.
    pub fn reference(antennas: u32) -> Self {
        Self {
            modulation_order: 64,
            n_subcarriers: 3264,
            n_ofdm: 14,
            ecpri_eff: 0.85,
            delay_data: 5e-4,
            delay_pr: 2e-4,
            n_bits: 16,
            n_gran: 136,
            antennas,
        }
    }

    pub fn with_antennas(&self, antennas: u32) -> Self {
        Self {
            antennas,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.modulation_order >= 2
            && self.modulation_order.is_power_of_two()
            && self.n_subcarriers > 0
            && self.n_ofdm > 0
            && self.ecpri_eff > 0.0
            && self.ecpri_eff <= 1.0
            && self.delay_data > 0.0
            && self.delay_pr > 0.0
            && self.n_bits > 0
            && self.n_gran > 0
            && self.antennas > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "invalid fronthaul parameters {self:?}"
            )))
        }
    }
}

/// Per-user data rate `log2(M_order) N_sc N_ofdm / (eff delay_data)`.
pub fn alpha1(fp: &FronthaulParams) -> BitRate {
    let bits = fp.modulation_order.ilog2() as f64 * fp.n_subcarriers as f64 * fp.n_ofdm as f64;
    BitRate::from_bps(bits / (fp.ecpri_eff * fp.delay_data))
}

/// Per-centralized-user weight rate `2 L N_bits N_gran / (eff delay_pr)`.
pub fn alpha2(fp: &FronthaulParams) -> BitRate {
    let bits = 2.0 * fp.antennas as f64 * fp.n_bits as f64 * fp.n_gran as f64;
    BitRate::from_bps(bits / (fp.ecpri_eff * fp.delay_pr))
}

/// Fronthaul load of one AP with `k_c` centralized and `k_d` distributed users.
pub fn fronthaul_load(k_c: usize, k_d: usize, fp: &FronthaulParams) -> BitRate {
    alpha2(fp) * k_c + alpha1(fp) * (k_c + k_d)
}

pub fn check_constraint(k_c: usize, k_d: usize, fp: &FronthaulParams, fh_max: BitRate) -> bool {
    fronthaul_load(k_c, k_d, fp) <= fh_max
}

/// Largest `K_d` that fits next to `k_c` centralized users, before any
/// antenna or user-count cap. `None` when `k_c` alone does not fit.
pub fn max_distributed_for(k_c: usize, fp: &FronthaulParams, fh_max: BitRate) -> Option<usize> {
    let used = fronthaul_load(k_c, 0, fp);
    if used > fh_max {
        return None;
    }
    Some(((fh_max.0 - used.0) / alpha1(fp).0) as usize)
}

/// `(K_max^c, K_max^d)`: each group alone under the fronthaul budget, capped
/// by the ZF rank conditions `K_c <= M L`, `K_d <= L - 1` and by `K`.
pub fn max_group_sizes(
    fp: &FronthaulParams,
    fh_max: BitRate,
    num_aps: usize,
    num_users: usize,
) -> (usize, usize) {
    let l = fp.antennas as usize;
    let per_c = alpha1(fp) + alpha2(fp);
    let k_c = ((fh_max.0 / per_c.0) as usize)
        .min(num_aps * l)
        .min(num_users);
    let k_d = ((fh_max.0 / alpha1(fp).0) as usize)
        .min(l.saturating_sub(1))
        .min(num_users);
    (k_c, k_d)
}

/// `K_max^c` when all `K` users must be served: `floor((FH_max - K alpha1) / alpha2)`.
/// With `swap_rates` the two rates trade places, giving
/// `floor((FH_max - K alpha2) / alpha1)`. `None` if even `K_c = 0` is over
/// budget.
pub fn serve_all_max_centralized(
    fp: &FronthaulParams,
    fh_max: BitRate,
    num_users: usize,
    swap_rates: bool,
) -> Option<usize> {
    let (per_user, per_c) = if swap_rates {
        (alpha2(fp), alpha1(fp))
    } else {
        (alpha1(fp), alpha2(fp))
    };
    let base = per_user * num_users;
    if base > fh_max {
        return None;
    }
    Some(((fh_max.0 - base.0) / per_c.0) as usize)
}
