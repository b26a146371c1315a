//! Network drops: AP/user placement on a wrapped square and the resulting
//! large-scale fading matrix.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Three-slope path loss with log-normal shadowing beyond the outer
/// breakpoint. Heights in meters, carrier in MHz, distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossModel {
    pub carrier_mhz: f64,
    pub ap_height: f64,
    pub user_height: f64,
    pub d0: f64,
    pub d1: f64,
    pub shadow_sigma_db: f64,
    pub shadowing: bool,
    pub d_min: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            carrier_mhz: 1900.0,
            ap_height: 15.0,
            user_height: 1.65,
            d0: 10.0,
            d1: 50.0,
            shadow_sigma_db: 8.0,
            shadowing: true,
            d_min: 1.0,
        }
    }
}

impl PathLossModel {
    /// Hata-COST231 constant term in dB.
    pub fn hata_constant_db(&self) -> f64 {
        let lf = self.carrier_mhz.log10();
        46.3 + 33.9 * lf - 13.82 * self.ap_height.log10() - (1.1 * lf - 0.7) * self.user_height
            + (1.56 * lf - 0.8)
    }

    /// Path loss in dB (a negative number) at distance `d` meters, without
    /// shadowing.
    pub fn path_loss_db(&self, d: f64) -> f64 {
        let km = |x: f64| x / 1000.0;
        let d = d.max(self.d_min);
        let l = self.hata_constant_db();
        if d > self.d1 {
            -l - 35.0 * km(d).log10()
        } else if d > self.d0 {
            -l - 15.0 * km(self.d1).log10() - 20.0 * km(d).log10()
        } else {
            -l - 15.0 * km(self.d1).log10() - 20.0 * km(self.d0).log10()
        }
    }
}

/// System-wide parameters. Powers `rho` and `rho_u` are transmit powers in
/// watts; the noise normalization is carried by the large-scale gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Coherence interval, samples.
    pub tau: usize,
    /// Pilot length, samples.
    pub tau_u: usize,
    pub rho: f64,
    pub rho_u: f64,
    pub noise_dbm: f64,
    /// Minimum SE of a centralized user, bit/s/Hz.
    pub qos_c: f64,
    /// Minimum SE of a distributed user, bit/s/Hz.
    pub qos_d: f64,
    /// Per-AP fronthaul capacity, bit/s.
    pub fh_max: f64,
    #[serde(default)]
    pub path_loss: PathLossModel,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemParams {
    /// 20 APs with 14 antennas serving 20 users on a 2 km wrapped square.
    pub fn reference() -> Self {
        Self {
            num_aps: 20,
            num_users: 20,
            antennas: 14,
            area_side: 2000.0,
            tau: 2000,
            tau_u: 20,
            rho: 1.0,
            rho_u: 0.5,
            noise_dbm: -92.0,
            qos_c: 1.0,
            qos_d: 1.0,
            fh_max: 9e9,
            path_loss: PathLossModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.num_aps == 0 || self.num_users == 0 || self.antennas == 0 {
            return bad("M, K and L must be at least 1");
        }
        if self.tau_u < self.num_users {
            return bad("orthogonal pilots need tau_u >= K");
        }
        if self.tau_u >= self.tau {
            return bad("tau_u must be shorter than the coherence interval");
        }
        if !(self.rho > 0.0 && self.rho_u > 0.0) {
            return bad("powers must be positive");
        }
        if !(self.area_side > 0.0) {
            return bad("area side must be positive");
        }
        if !(self.qos_c >= 0.0 && self.qos_d >= 0.0 && self.fh_max >= 0.0) {
            return bad("QoS targets and fronthaul capacity must be non-negative");
        }
        Ok(())
    }

    /// Pre-log factor of the downlink SE, `1 - tau_u / tau`.
    pub fn prelog(&self) -> f64 {
        1.0 - self.tau_u as f64 / self.tau as f64
    }

    /// Noise power in watts.
    pub fn noise_watts(&self) -> f64 {
        10f64.powf((self.noise_dbm - 30.0) / 10.0)
    }
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// M x K linear large-scale gains, divided by the noise power.
    pub beta: DMatrix<f64>,
}

impl Scenario {
    /// Total large-scale gain of every user, `sum_m beta[m][k]`.
    pub fn total_gain(&self) -> Vec<f64> {
        total_gain(&self.beta)
    }
}

pub fn total_gain(beta: &DMatrix<f64>) -> Vec<f64> {
    beta.column_iter().map(|c| c.sum()).collect()
}

/// Euclidean distance on the torus obtained by wrapping the square of side
/// `side` onto itself.
pub fn wraparound_distance(p1: Point, p2: Point, side: f64) -> f64 {
    let axis = |a: f64, b: f64| {
        let d = (a - b).abs() % side;
        d.min(side - d)
    };
    axis(p1[0], p2[0]).hypot(axis(p1[1], p2[1]))
}

/// Draws one network realization. Deterministic in `(params, seed)`.
pub fn generate_drop(params: &SystemParams, seed: u64) -> Scenario {
    let mut rng = rng::rng_for(seed, &[rng::DROP]);
    let side = params.area_side;
    let mut place = |n: usize| -> Vec<Point> {
        (0..n)
            .map(|_| [rng.gen_range(0.0..side), rng.gen_range(0.0..side)])
            .collect()
    };
    let ap_positions = place(params.num_aps);
    let user_positions = place(params.num_users);

    let pl = &params.path_loss;
    let noise = params.noise_watts();
    let mut beta = DMatrix::zeros(params.num_aps, params.num_users);
    for m in 0..params.num_aps {
        for k in 0..params.num_users {
            let d = wraparound_distance(ap_positions[m], user_positions[k], side).max(pl.d_min);
            // One normal per pair keeps streams aligned whether or not it is used.
            let z: f64 = rng.sample(StandardNormal);
            let shadow_db = if pl.shadowing && d > pl.d1 {
                pl.shadow_sigma_db * z
            } else {
                0.0
            };
            beta[(m, k)] = 10f64.powf((pl.path_loss_db(d) + shadow_db) / 10.0) / noise;
        }
    }

    Scenario {
        params: params.clone(),
        ap_positions,
        user_positions,
        beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive check over all nine translated images of `p2`.
    fn nine_image_distance(p1: Point, p2: Point, side: f64) -> f64 {
        let mut best = f64::INFINITY;
        for sx in [-1.0, 0.0, 1.0] {
            for sy in [-1.0, 0.0, 1.0] {
                let dx = p1[0] - (p2[0] + sx * side);
                let dy = p1[1] - (p2[1] + sy * side);
                best = best.min(dx.hypot(dy));
            }
        }
        best
    }

    #[test]
    fn wraparound_examples() {
        assert_eq!(wraparound_distance([3.0, 4.0], [3.0, 4.0], 2000.0), 0.0);
        assert_eq!(wraparound_distance([0.0, 0.0], [1999.0, 0.0], 2000.0), 1.0);
        let d = wraparound_distance([0.0, 0.0], [900.0, 1200.0], 2000.0);
        let oracle = nine_image_distance([0.0, 0.0], [900.0, 1200.0], 2000.0);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 900f64.hypot(800.0)).abs() < 1e-12);
    }

    #[test]
    fn hata_constant_reference_value() {
        // 140.7 dB for 1.9 GHz, 15 m and 1.65 m antennas.
        let l = PathLossModel::default().hata_constant_db();
        assert!((l - 140.7).abs() < 0.05, "{l}");
    }

    #[test]
    fn path_loss_is_continuous_at_breakpoints() {
        let pl = PathLossModel::default();
        for b in [pl.d0, pl.d1] {
            let lo = pl.path_loss_db(b);
            let hi = pl.path_loss_db(b + 1e-9);
            assert!((lo - hi).abs() < 1e-6);
        }
    }

    #[test]
    fn determinism() {
        let p = SystemParams::reference();
        assert_eq!(generate_drop(&p, 11), generate_drop(&p, 11));
        assert_ne!(generate_drop(&p, 11).beta, generate_drop(&p, 12).beta);
    }

    #[test]
    fn colocated_ap_and_user_is_finite() {
        let pl = PathLossModel::default();
        let d = wraparound_distance([5.0, 5.0], [5.0, 5.0], 2000.0).max(pl.d_min);
        assert_eq!(d, 1.0);
        assert!(pl.path_loss_db(0.0).is_finite());
        assert_eq!(pl.path_loss_db(0.0), pl.path_loss_db(1.0));
    }

    #[test]
    fn positions_inside_area_and_beta_positive() {
        let p = SystemParams::reference();
        let s = generate_drop(&p, 3);
        for q in s.ap_positions.iter().chain(&s.user_positions) {
            assert!(q.iter().all(|&c| (0.0..p.area_side).contains(&c)));
        }
        assert!(s.beta.iter().all(|&b| b > 0.0 && b.is_finite()));
    }

    #[test]
    fn normalization_scales_uniformly() {
        let mut p = SystemParams::reference();
        let a = generate_drop(&p, 5);
        p.noise_dbm -= 10.0;
        let b = generate_drop(&p, 5);
        let ratios: Vec<f64> = a
            .beta
            .iter()
            .zip(b.beta.iter())
            .map(|(x, y)| y / x)
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-12);
        }
        assert!((ratios[0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        let mut p = SystemParams::reference();
        assert!(p.validate().is_ok());
        p.tau_u = 19;
        assert!(p.validate().is_err());
        p.tau_u = 2000;
        assert!(p.validate().is_err());
        let mut p = SystemParams::reference();
        p.antennas = 0;
        assert!(p.validate().is_err());
        assert!((SystemParams::reference().prelog() - 0.99).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn torus_symmetric_and_bounded(
            ax in 0.0..2000.0f64, ay in 0.0..2000.0f64,
            bx in 0.0..2000.0f64, by in 0.0..2000.0f64,
        ) {
            let d1 = wraparound_distance([ax, ay], [bx, by], 2000.0);
            let d2 = wraparound_distance([bx, by], [ax, ay], 2000.0);
            prop_assert!((d1 - d2).abs() < 1e-9);
            prop_assert!(d1 <= 2000.0 * 2f64.sqrt() / 2.0 + 1e-9);
            prop_assert!((d1 - nine_image_distance([ax, ay], [bx, by], 2000.0)).abs() < 1e-9);
        }

        #[test]
        fn path_loss_monotone(a in 0.0..3000.0f64, b in 0.0..3000.0f64) {
            let pl = PathLossModel::default();
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(pl.path_loss_db(near) >= pl.path_loss_db(far));
        }
    }
}
