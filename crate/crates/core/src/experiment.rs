//! Multi-drop experiments: sweep a system parameter, run every scheme on
//! every drop, and average.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::fronthaul::{self, BitRate, FronthaulParams};
use crate::grouping::{
    self, AllocMode, Evaluation, Evaluator, GroupingMethod, MonteCarloMu, MuProvider, OpaCache,
    SweepConfig, SweepMode,
};
use crate::oracle;
use crate::power::{Objective, ScaSettings};
use crate::rng;
use crate::scenario::{self, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Hybrid,
    Centralized,
    Distributed,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hybrid => "hybrid",
            Scheme::Centralized => "centralized",
            Scheme::Distributed => "distributed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Per-AP fronthaul capacity, values in Gbit/s.
    #[serde(rename = "fh")]
    Fronthaul,
    /// Antennas per AP.
    #[serde(rename = "L")]
    Antennas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    /// `antennas` is overwritten by `system.antennas` or the swept `L`.
    pub fronthaul: FronthaulParams,
    pub sweep: Sweep,
    pub schemes: Vec<Scheme>,
    /// Grouping methods tried by the hybrid scheme.
    pub methods: Vec<GroupingMethod>,
    /// `epa` and/or `opa`.
    pub allocs: Vec<AllocMode>,
    pub n_drops: usize,
    pub n_mu_draws: usize,
    /// When positive, every row is re-checked against the Monte Carlo oracle.
    pub n_oracle_draws: usize,
    pub seed: u64,
    pub mode: SweepMode,
    /// Swapped-rate `K_max^c` in serve-all mode.
    pub fig3_kmax_compat: bool,
    pub objective: Objective,
    /// SCA on every sweep candidate instead of only the finalists.
    pub full_opa_sweep: bool,
    /// Write zeros instead of timings so reruns are byte-identical.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::reference(),
            fronthaul: FronthaulParams::reference(14),
            sweep: Sweep {
                axis: SweepAxis::Fronthaul,
                values: (4..=12).map(f64::from).collect(),
            },
            schemes: vec![Scheme::Hybrid, Scheme::Centralized, Scheme::Distributed],
            methods: vec![GroupingMethod::KMeans],
            allocs: vec![AllocMode::Opa, AllocMode::Epa],
            n_drops: 50,
            n_mu_draws: 300,
            n_oracle_draws: 0,
            seed: 1,
            mode: SweepMode::CapacityLimited,
            fig3_kmax_compat: false,
            objective: Objective::GeoMean,
            full_opa_sweep: false,
            record_wall_time: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.sweep.values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self.n_drops == 0 {
            return bad("n_drops must be at least 1".into());
        }
        if self.n_mu_draws == 0 {
            return bad("n_mu_draws must be at least 1".into());
        }
        if self.schemes.is_empty() || self.allocs.is_empty() {
            return bad("schemes and allocs must be non-empty".into());
        }
        if self.schemes.contains(&Scheme::Hybrid) && self.methods.is_empty() {
            return bad("the hybrid scheme needs at least one grouping method".into());
        }
        if self.allocs.contains(&AllocMode::FullOpa) {
            return bad("use full_opa_sweep instead of the full_opa alloc".into());
        }
        for &v in &self.sweep.values {
            let ok = match self.sweep.axis {
                SweepAxis::Fronthaul => v >= 0.0 && v.is_finite(),
                SweepAxis::Antennas => v >= 1.0 && v.fract() == 0.0,
            };
            if !ok {
                return bad(format!("invalid sweep value {v}"));
            }
        }
        for v in &self.sweep.values {
            let (p, fp) = self.point(*v);
            p.validate()?;
            fp.validate()?;
        }
        Ok(())
    }

    /// System and fronthaul parameters at one sweep value.
    pub fn point(&self, value: f64) -> (SystemParams, FronthaulParams) {
        let mut p = self.system.clone();
        match self.sweep.axis {
            SweepAxis::Fronthaul => p.fh_max = value * 1e9,
            SweepAxis::Antennas => p.antennas = value as usize,
        }
        let fp = self.fronthaul.with_antennas(p.antennas as u32);
        (p, fp)
    }

    fn sca_settings(&self) -> ScaSettings {
        ScaSettings {
            objective: self.objective,
            ..ScaSettings::default()
        }
    }
}

/// One output line: a scheme on one drop at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub drop_id: usize,
    pub scheme: Scheme,
    /// `None` for the pure schemes.
    pub method: Option<GroupingMethod>,
    pub alloc: AllocMode,
    pub k_c: usize,
    pub k_d: usize,
    pub sum_se: f64,
    pub min_user_se: f64,
    pub feasible: bool,
    pub fh_used_max_ap: BitRate,
    pub sca_iters: usize,
    pub wall_time_ms: f64,
    /// Largest relative gap between closed-form and oracle SINRs.
    pub oracle_max_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub method: Option<GroupingMethod>,
    pub alloc: AllocMode,
    pub n_drops: usize,
    pub mean_sum_se: f64,
    pub mean_min_user_se: f64,
    pub feasible_fraction: f64,
    pub mean_k_c: f64,
    pub mean_k_d: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<Row>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentResult {
    /// Mean sum SE of one series at one sweep value.
    pub fn mean(
        &self,
        value: f64,
        scheme: Scheme,
        method: Option<GroupingMethod>,
        alloc: AllocMode,
    ) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|a| {
                a.sweep_value == value
                    && a.scheme == scheme
                    && a.method == method
                    && a.alloc == alloc
            })
            .map(|a| a.mean_sum_se)
    }
}

struct DropContext<'a> {
    cfg: &'a ExperimentConfig,
    drop_id: usize,
    stats: ChannelStats,
    sca: ScaSettings,
}

impl DropContext<'_> {
    fn row(
        &self,
        sweep: (usize, f64),
        scheme: Scheme,
        method: Option<GroupingMethod>,
        alloc: AllocMode,
        eval: Option<&Evaluation>,
        started: Instant,
    ) -> Row {
        let wall_time_ms = if self.cfg.record_wall_time {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let base = Row {
            sweep_index: sweep.0,
            sweep_value: sweep.1,
            drop_id: self.drop_id,
            scheme,
            method,
            alloc,
            k_c: 0,
            k_d: 0,
            sum_se: 0.0,
            min_user_se: 0.0,
            feasible: false,
            fh_used_max_ap: BitRate::ZERO,
            sca_iters: 0,
            wall_time_ms,
            oracle_max_rel_err: None,
        };
        match eval {
            None => base,
            Some(e) => Row {
                k_c: e.grouping.k_c(),
                k_d: e.grouping.k_d(),
                sum_se: e.report.sum_se,
                min_user_se: if e.report.se.is_empty() {
                    0.0
                } else {
                    e.report.min_se()
                },
                feasible: e.report.feasible,
                fh_used_max_ap: e.report.max_fh_used(),
                sca_iters: e.sca.map_or(0, |s| s.iterations),
                ..base
            },
        }
    }

    fn oracle_gap(
        &self,
        e: &Evaluation,
        antennas: usize,
        mu: &nalgebra::DMatrix<f64>,
    ) -> Result<f64> {
        let seed = rng::derive_seed(self.cfg.seed, &[rng::ORACLE, self.drop_id as u64]);
        let mc = oracle::mc_uatf_sinr(
            &self.stats,
            &e.grouping,
            &e.alloc,
            antennas,
            self.cfg.n_oracle_draws,
            seed,
        )?;
        let closed = crate::se::all_sinrs(&self.stats, &e.grouping, antennas, mu, &e.alloc)?;
        Ok(closed
            .iter()
            .zip(&mc.sinr)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, o)| (o / c - 1.0).abs())
            .fold(0.0, f64::max))
    }

    fn run(&self) -> Result<Vec<Row>> {
        let cfg = self.cfg;
        let mut rows = Vec::new();
        // Caches stay valid across fronthaul values but not across L.
        let mut cache_l = usize::MAX;
        let mut mu_owner: Option<MonteCarloMu<'_>> = None;
        let mut opa_cache = OpaCache::default();
        let mu_seed = rng::derive_seed(cfg.seed, &[rng::MU, self.drop_id as u64]);
        let grouping_seed = rng::derive_seed(cfg.seed, &[rng::GROUPING, self.drop_id as u64]);

        for (si, &value) in cfg.sweep.values.iter().enumerate() {
            let (params, fp) = cfg.point(value);
            if params.antennas != cache_l {
                cache_l = params.antennas;
                mu_owner = Some(MonteCarloMu::new(
                    &self.stats,
                    params.antennas,
                    cfg.n_mu_draws,
                    mu_seed,
                ));
                opa_cache = OpaCache::default();
            }
            let mu = mu_owner.as_ref().expect("set above");
            let eval = Evaluator {
                stats: &self.stats,
                params: &params,
                fp: &fp,
                mu,
                sca: &self.sca,
                opa_cache: Some(&opa_cache),
            };
            let sweep = (si, value);
            for &scheme in &cfg.schemes {
                let methods: Vec<Option<GroupingMethod>> = match scheme {
                    Scheme::Hybrid => cfg.methods.iter().copied().map(Some).collect(),
                    _ => vec![None],
                };
                for method in methods {
                    for &alloc in &cfg.allocs {
                        let started = Instant::now();
                        let result = match (scheme, method) {
                            (Scheme::Hybrid, Some(method)) => {
                                let sweep_alloc = if alloc == AllocMode::Opa && cfg.full_opa_sweep {
                                    AllocMode::FullOpa
                                } else {
                                    alloc
                                };
                                let sc = SweepConfig {
                                    method,
                                    alloc: sweep_alloc,
                                    mode: cfg.mode,
                                    swap_rates: cfg.fig3_kmax_compat,
                                    seed: grouping_seed,
                                };
                                grouping::sweep_select(&eval, &sc)?.map(|o| o.best)
                            }
                            _ => {
                                let g = if scheme == Scheme::Centralized {
                                    grouping::centralized_baseline(
                                        &self.stats.beta,
                                        &params,
                                        &fp,
                                        cfg.mode,
                                    )
                                } else {
                                    grouping::distributed_baseline(
                                        &self.stats.beta,
                                        &params,
                                        &fp,
                                        cfg.mode,
                                    )
                                };
                                match g {
                                    Some(g) => Some(eval.evaluate(&g, alloc != AllocMode::Epa)?),
                                    None => None,
                                }
                            }
                        };
                        let mut row =
                            self.row(sweep, scheme, method, alloc, result.as_ref(), started);
                        if cfg.n_oracle_draws > 0 {
                            if let Some(e) = &result {
                                if e.grouping.num_served() > 0 {
                                    let m = mu.mu(&e.grouping.centralized)?;
                                    row.oracle_max_rel_err =
                                        Some(self.oracle_gap(e, params.antennas, &m)?);
                                }
                            }
                        }
                        rows.push(row);
                    }
                }
            }
        }
        Ok(rows)
    }
}

fn aggregate(rows: &[Row]) -> Vec<AggregateRow> {
    let mut out: Vec<(usize, AggregateRow)> = Vec::new();
    let mut sums: Vec<[f64; 5]> = Vec::new();
    for r in rows {
        let key = |a: &AggregateRow| {
            a.sweep_value == r.sweep_value
                && a.scheme == r.scheme
                && a.method == r.method
                && a.alloc == r.alloc
        };
        let i = match out.iter().position(|(_, a)| key(a)) {
            Some(i) => i,
            None => {
                out.push((
                    r.sweep_index,
                    AggregateRow {
                        sweep_value: r.sweep_value,
                        scheme: r.scheme,
                        method: r.method,
                        alloc: r.alloc,
                        n_drops: 0,
                        mean_sum_se: 0.0,
                        mean_min_user_se: 0.0,
                        feasible_fraction: 0.0,
                        mean_k_c: 0.0,
                        mean_k_d: 0.0,
                    },
                ));
                sums.push([0.0; 5]);
                out.len() - 1
            }
        };
        out[i].1.n_drops += 1;
        let s = &mut sums[i];
        s[0] += r.sum_se;
        s[1] += r.min_user_se;
        s[2] += f64::from(u8::from(r.feasible));
        s[3] += r.k_c as f64;
        s[4] += r.k_d as f64;
    }
    out.into_iter()
        .zip(sums)
        .map(|((_, mut a), s)| {
            let n = a.n_drops as f64;
            a.mean_sum_se = s[0] / n;
            a.mean_min_user_se = s[1] / n;
            a.feasible_fraction = s[2] / n;
            a.mean_k_c = s[3] / n;
            a.mean_k_d = s[4] / n;
            a
        })
        .collect()
}

/// Runs every drop (in parallel on the current rayon pool) and returns rows
/// sorted by sweep value, then drop, then scheme/method/alloc in config
/// order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let per_drop = (0..cfg.n_drops)
        .into_par_iter()
        .map(|drop_id| {
            let drop_seed = rng::derive_seed(cfg.seed, &[rng::DROP, drop_id as u64]);
            let scenario = scenario::generate_drop(&cfg.system, drop_seed);
            let stats = ChannelStats::new(scenario.beta, cfg.system.tau_u, cfg.system.rho_u);
            DropContext {
                cfg,
                drop_id,
                stats,
                sca: cfg.sca_settings(),
            }
            .run()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<Row> = per_drop.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.sweep_index, r.drop_id));
    let aggregate = aggregate(&rows);
    Ok(ExperimentResult { rows, aggregate })
}

/// Operation counts and precoding fronthaul of the three schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub scheme: Scheme,
    pub k_c: usize,
    pub k_d: usize,
    /// `M L K_c^2 + K_c^3`.
    pub centralized_ops: u64,
    /// `L K_d^2 + K_d^3`, per AP.
    pub distributed_ops: u64,
    /// Precoding-weight fronthaul per AP.
    pub fh_precoding: BitRate,
}

pub fn complexity_report(
    params: &SystemParams,
    fp: &FronthaulParams,
    hybrid_k_c: usize,
) -> Vec<ComplexityRow> {
    let (m, l, k) = (
        params.num_aps as u64,
        params.antennas as u64,
        params.num_users,
    );
    let fp = fp.with_antennas(params.antennas as u32);
    let row = |scheme, k_c: usize, k_d: usize| {
        let (c, d) = (k_c as u64, k_d as u64);
        ComplexityRow {
            scheme,
            k_c,
            k_d,
            centralized_ops: m * l * c * c + c * c * c,
            distributed_ops: l * d * d + d * d * d,
            fh_precoding: fronthaul::alpha2(&fp) * k_c,
        }
    };
    let k_c = hybrid_k_c.min(k);
    vec![
        row(Scheme::Hybrid, k_c, k - k_c),
        row(Scheme::Centralized, k, 0),
        row(Scheme::Distributed, 0, k),
    ]
}
