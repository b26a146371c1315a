//! Power allocation: equal power (EPA) and SCA-optimized power (OPA).

pub mod conic;
mod sca;

pub use sca::{
    build_subproblem, solve_sca, Objective, ScaOutcome, ScaSettings, ScaState, SubproblemLayout,
    SubproblemSpec, TraceRow,
};

use nalgebra::DMatrix;

use crate::precoding::Grouping;
use crate::se::PowerAllocation;

/// Equal power: every coefficient set to `rho / max_m (sum_c mu_mk + K_d)`,
/// so the most loaded AP transmits exactly `rho`.
pub fn epa(num_aps: usize, grouping: &Grouping, mu: &DMatrix<f64>, rho: f64) -> PowerAllocation {
    let worst = (0..num_aps)
        .map(|m| {
            let c: f64 = if grouping.k_c() == 0 {
                0.0
            } else {
                mu.row(m).sum()
            };
            c + grouping.k_d() as f64
        })
        .fold(0f64, f64::max);
    if worst <= 0.0 {
        return PowerAllocation::zeros(num_aps, grouping);
    }
    PowerAllocation::uniform(num_aps, grouping, rho / worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn single_distributed_user_gets_full_power() {
        let g = Grouping::new(vec![], vec![0]);
        let a = epa(1, &g, &DMatrix::zeros(1, 0), 0.8);
        assert_eq!(a.eta_d[(0, 0)], 0.8);
    }

    #[test]
    fn tight_at_most_loaded_ap() {
        let g = Grouping::new(vec![0, 1], vec![2]);
        let mu = dmatrix![0.5, 0.25; 2.0, 1.0; 0.1, 0.1];
        let a = epa(3, &g, &mu, 1.0);
        let loads = a.ap_loads(&mu);
        let max = loads.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
        assert!((loads[1] - 1.0).abs() < 1e-15);
        assert!(loads.iter().all(|&l| l <= 1.0 + 1e-15));
    }

    #[test]
    fn homogeneous_in_rho() {
        let g = Grouping::new(vec![0], vec![1, 2]);
        let mu = dmatrix![0.5; 2.0];
        let a = epa(2, &g, &mu, 1.0);
        let b = epa(2, &g, &mu, 2.0);
        assert_eq!(a.scale(2.0), b);
    }

    #[test]
    fn nobody_served() {
        let a = epa(2, &Grouping::default(), &DMatrix::zeros(2, 0), 1.0);
        assert_eq!(a.eta_c.len() + a.eta_d.len(), 0);
    }
}
