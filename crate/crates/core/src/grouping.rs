//! User grouping: which users get centralized ZF, which get local ZF, and
//! the K_c sweep that picks the best split under the fronthaul budget.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::fronthaul::{self, BitRate, FronthaulParams};
use crate::power::{self, ScaSettings};
use crate::precoding::{estimate_mu, Grouping};
use crate::rng;
use crate::scenario::{total_gain, SystemParams};
use crate::se::{self, PowerAllocation, SeReport};

/// Largest user count accepted by [`GroupingMethod::Exhaustive`].
pub const EXHAUSTIVE_MAX_USERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingMethod {
    KMeans,
    Lsf,
    Random,
    /// Every centralized subset of each size; small K only.
    Exhaustive,
}

impl GroupingMethod {
    pub fn name(self) -> &'static str {
        match self {
            GroupingMethod::KMeans => "kmeans",
            GroupingMethod::Lsf => "lsf",
            GroupingMethod::Random => "random",
            GroupingMethod::Exhaustive => "exhaustive",
        }
    }
}

/// Power allocation used while sweeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocMode {
    Epa,
    /// EPA for the sweep, SCA on the winner and on the pure endpoints.
    Opa,
    /// SCA on every candidate.
    FullOpa,
}

impl AllocMode {
    pub fn name(self) -> &'static str {
        match self {
            AllocMode::Epa => "epa",
            AllocMode::Opa | AllocMode::FullOpa => "opa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Serve as many users as the fronthaul allows, dropping the weakest.
    #[default]
    CapacityLimited,
    /// Every user must be served.
    #[serde(rename = "serve_all_K")]
    ServeAll,
}

/// `1 - <b1, b2> / (|b1| |b2|)`, clamped to `[0, 1]`.
pub fn cosine_distance(b1: &[f64], b2: &[f64]) -> Result<f64> {
    let dot: f64 = b1.iter().zip(b2).map(|(a, b)| a * b).sum();
    let n1 = b1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n2 = b2.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((1.0 - dot / (n1 * n2)).clamp(0.0, 1.0))
}

fn columns(beta: &DMatrix<f64>) -> Vec<Vec<f64>> {
    beta.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn mean_pairwise(vs: &[Vec<f64>], members: &[usize]) -> Result<f64> {
    if members.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            sum += cosine_distance(&vs[i], &vs[j])?;
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

/// Users ordered by cosine distance to the centroid of the tighter of two
/// K-means clusters, closest first.
///
/// Centroids start at the two users furthest apart and iterate to a fixed
/// point (at most 100 rounds). The tighter cluster is the one with smaller
/// mean pairwise distance; singleton or empty clusters count as infinitely
/// loose.
pub fn kmeans_ranking(beta: &DMatrix<f64>) -> Result<Vec<usize>> {
    let k = beta.ncols();
    if k < 2 {
        return Ok((0..k).collect());
    }
    let vs = columns(beta);
    let (mut s0, mut s1, mut far) = (0, 1, -1.0);
    for i in 0..k {
        for j in i + 1..k {
            let d = cosine_distance(&vs[i], &vs[j])?;
            if d > far {
                (s0, s1, far) = (i, j, d);
            }
        }
    }
    let mut centroids = [vs[s0].clone(), vs[s1].clone()];
    let mut assign = vec![usize::MAX; k];
    for _ in 0..100 {
        let mut changed = false;
        for u in 0..k {
            let d0 = cosine_distance(&vs[u], &centroids[0])?;
            let d1 = cosine_distance(&vs[u], &centroids[1])?;
            let c = usize::from(d1 < d0);
            changed |= assign[u] != c;
            assign[u] = c;
        }
        if !changed {
            break;
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..k).filter(|&u| assign[u] == c).collect();
            if members.is_empty() {
                continue;
            }
            for (m, x) in centroid.iter_mut().enumerate() {
                *x = members.iter().map(|&u| vs[u][m]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let spread = |c: usize| -> Result<f64> {
        let members: Vec<usize> = (0..k).filter(|&u| assign[u] == c).collect();
        mean_pairwise(&vs, &members)
    };
    let tight = if spread(1)? < spread(0)? { 1 } else { 0 };
    let mut keyed = (0..k)
        .map(|u| Ok((cosine_distance(&vs[u], &centroids[tight])?, u)))
        .collect::<Result<Vec<_>>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, u)| u).collect())
}

/// Splits users into the `k_c` given by `ranking` and everybody else.
fn split(k: usize, mut centralized: Vec<usize>) -> Grouping {
    centralized.sort_unstable();
    let distributed = (0..k)
        .filter(|u| centralized.binary_search(u).is_err())
        .collect();
    Grouping::new(centralized, distributed)
}

pub fn kmeans_group(beta: &DMatrix<f64>, k_c: usize) -> Result<Grouping> {
    let ranking = kmeans_ranking(beta)?;
    Ok(split(
        beta.ncols(),
        ranking[..k_c.min(ranking.len())].to_vec(),
    ))
}

/// Users by descending total gain, ties by index.
pub fn lsf_ranking(beta: &DMatrix<f64>) -> Vec<usize> {
    let gain = total_gain(beta);
    let mut idx: Vec<usize> = (0..gain.len()).collect();
    idx.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]).then(a.cmp(&b)));
    idx
}

pub fn lsf_group(beta: &DMatrix<f64>, k_c: usize) -> Grouping {
    let ranking = lsf_ranking(beta);
    split(beta.ncols(), ranking[..k_c.min(ranking.len())].to_vec())
}

pub fn random_group(k: usize, k_c: usize, seed: u64) -> Grouping {
    let mut rng = rng::rng_for(seed, &[rng::GROUPING]);
    split(k, sample(&mut rng, k, k_c.min(k)).into_vec())
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Source of `mu` (M x K_c) for a centralized set.
pub trait MuProvider {
    fn mu(&self, centralized: &[usize]) -> Result<DMatrix<f64>>;
}

/// Monte Carlo `mu` with a per-set cache. All sets share the same seed, so
/// a user's channel draws are common across candidate groupings.
pub struct MonteCarloMu<'a> {
    stats: &'a ChannelStats,
    antennas: usize,
    n_draws: usize,
    seed: u64,
    cache: RefCell<HashMap<Vec<usize>, DMatrix<f64>>>,
}

impl<'a> MonteCarloMu<'a> {
    pub fn new(stats: &'a ChannelStats, antennas: usize, n_draws: usize, seed: u64) -> Self {
        Self {
            stats,
            antennas,
            n_draws,
            seed,
            cache: RefCell::default(),
        }
    }
}

impl MuProvider for MonteCarloMu<'_> {
    fn mu(&self, centralized: &[usize]) -> Result<DMatrix<f64>> {
        if centralized.is_empty() {
            return Ok(DMatrix::zeros(self.stats.num_aps(), 0));
        }
        if let Some(mu) = self.cache.borrow().get(centralized) {
            return Ok(mu.clone());
        }
        let g = Grouping::new(centralized.to_vec(), Vec::new());
        let mu = estimate_mu(self.stats, &g, self.antennas, self.n_draws, self.seed)?.mu;
        self.cache
            .borrow_mut()
            .insert(centralized.to_vec(), mu.clone());
        Ok(mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaSummary {
    pub iterations: usize,
    pub converged: bool,
    pub qos_infeasible: bool,
}

/// SCA results by grouping. Valid for one drop and one set of system
/// parameters apart from the fronthaul budget, which SCA does not see.
#[derive(Default)]
pub struct OpaCache(RefCell<HashMap<Grouping, (PowerAllocation, ScaSummary)>>);

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub grouping: Grouping,
    pub alloc: PowerAllocation,
    pub report: SeReport,
    /// Present when the allocation came from SCA.
    pub sca: Option<ScaSummary>,
}

/// Everything needed to score a grouping on one drop.
pub struct Evaluator<'a> {
    pub stats: &'a ChannelStats,
    pub params: &'a SystemParams,
    pub fp: &'a FronthaulParams,
    pub mu: &'a dyn MuProvider,
    pub sca: &'a ScaSettings,
    pub opa_cache: Option<&'a OpaCache>,
}

impl Evaluator<'_> {
    pub fn fh_max(&self) -> BitRate {
        BitRate::from_bps(self.params.fh_max)
    }

    fn report(
        &self,
        grouping: &Grouping,
        mu: &DMatrix<f64>,
        alloc: &PowerAllocation,
    ) -> Result<SeReport> {
        se::sum_se(self.stats, grouping, mu, alloc, self.params, self.fp)
    }

    pub fn epa(&self, grouping: &Grouping) -> Result<Evaluation> {
        let mu = self.mu.mu(&grouping.centralized)?;
        let alloc = power::epa(self.stats.num_aps(), grouping, &mu, self.params.rho);
        let report = self.report(grouping, &mu, &alloc)?;
        Ok(Evaluation {
            grouping: grouping.clone(),
            alloc,
            report,
            sca: None,
        })
    }

    pub fn opa(&self, grouping: &Grouping) -> Result<Evaluation> {
        let mu = self.mu.mu(&grouping.centralized)?;
        let cached = self
            .opa_cache
            .and_then(|c| c.0.borrow().get(grouping).cloned());
        let (alloc, summary) = match cached {
            Some(hit) => hit,
            None => {
                let init = power::epa(self.stats.num_aps(), grouping, &mu, self.params.rho);
                let out = power::solve_sca(
                    self.stats,
                    grouping,
                    &mu,
                    self.params,
                    self.fp,
                    &init,
                    self.sca,
                )?;
                let summary = ScaSummary {
                    iterations: out.iterations,
                    converged: out.converged,
                    qos_infeasible: out.qos_infeasible,
                };
                if let Some(c) = self.opa_cache {
                    c.0.borrow_mut()
                        .insert(grouping.clone(), (out.alloc.clone(), summary));
                }
                (out.alloc, summary)
            }
        };
        let report = self.report(grouping, &mu, &alloc)?;
        Ok(Evaluation {
            grouping: grouping.clone(),
            alloc,
            report,
            sca: Some(summary),
        })
    }

    pub fn evaluate(&self, grouping: &Grouping, opa: bool) -> Result<Evaluation> {
        if opa {
            self.opa(grouping)
        } else {
            self.epa(grouping)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub method: GroupingMethod,
    pub alloc: AllocMode,
    pub mode: SweepMode,
    /// Use the swapped-rate `K_max^c` formula in [`SweepMode::ServeAll`].
    pub swap_rates: bool,
    /// Seeds random grouping.
    pub seed: u64,
}

/// Adds the `k_d` strongest users outside `centralized` as distributed.
fn fill(beta: &DMatrix<f64>, mut centralized: Vec<usize>, k_d: usize) -> Grouping {
    centralized.sort_unstable();
    let mut distributed: Vec<usize> = lsf_ranking(beta)
        .into_iter()
        .filter(|u| centralized.binary_search(u).is_err())
        .take(k_d)
        .collect();
    distributed.sort_unstable();
    Grouping::new(centralized, distributed)
}

fn distributed_cap(
    k_c: usize,
    params: &SystemParams,
    fp: &FronthaulParams,
    fh: BitRate,
) -> Option<usize> {
    let cap = fronthaul::max_distributed_for(k_c, fp, fh)?;
    Some(
        cap.min(params.num_users - k_c)
            .min(params.antennas.saturating_sub(1)),
    )
}

/// All-distributed scheme: the strongest users up to the fronthaul and
/// antenna caps.
pub fn distributed_baseline(
    beta: &DMatrix<f64>,
    params: &SystemParams,
    fp: &FronthaulParams,
    mode: SweepMode,
) -> Option<Grouping> {
    let fh = BitRate::from_bps(params.fh_max);
    let k_d = distributed_cap(0, params, fp, fh)?;
    if mode == SweepMode::ServeAll && k_d < params.num_users {
        return None;
    }
    Some(fill(beta, Vec::new(), k_d))
}

/// All-centralized scheme: the strongest `K_max^c` users.
pub fn centralized_baseline(
    beta: &DMatrix<f64>,
    params: &SystemParams,
    fp: &FronthaulParams,
    mode: SweepMode,
) -> Option<Grouping> {
    let fh = BitRate::from_bps(params.fh_max);
    let k = params.num_users;
    let (k_c, _) = fronthaul::max_group_sizes(fp, fh, params.num_aps, k);
    if mode == SweepMode::ServeAll && k_c < k {
        return None;
    }
    Some(Grouping::new(lsf_group(beta, k_c).centralized, Vec::new()))
}

fn centralized_sets(beta: &DMatrix<f64>, cfg: &SweepConfig, k_c: usize) -> Result<Vec<Vec<usize>>> {
    let k = beta.ncols();
    Ok(match cfg.method {
        GroupingMethod::KMeans => vec![kmeans_ranking(beta)?[..k_c].to_vec()],
        GroupingMethod::Lsf => vec![lsf_ranking(beta)[..k_c].to_vec()],
        GroupingMethod::Random => {
            let seed = rng::derive_seed(cfg.seed, &[rng::GROUPING, k_c as u64]);
            vec![random_group(k, k_c, seed).centralized]
        }
        GroupingMethod::Exhaustive => {
            if k > EXHAUSTIVE_MAX_USERS {
                return Err(Error::InvalidParams(format!(
                    "exhaustive grouping supports at most {EXHAUSTIVE_MAX_USERS} users, got {k}"
                )));
            }
            combinations(k, k_c)
        }
    })
}

/// Candidate groupings in sweep order (increasing `K_c`).
pub fn sweep_candidates(
    beta: &DMatrix<f64>,
    params: &SystemParams,
    fp: &FronthaulParams,
    cfg: &SweepConfig,
) -> Result<Vec<Grouping>> {
    let fh = BitRate::from_bps(params.fh_max);
    let (k, l) = (params.num_users, params.antennas);
    let mut out: Vec<Grouping> = Vec::new();
    match cfg.mode {
        SweepMode::CapacityLimited => {
            let (kmax_c, _) = fronthaul::max_group_sizes(fp, fh, params.num_aps, k);
            for k_c in 0..=kmax_c {
                let Some(k_d) = distributed_cap(k_c, params, fp, fh) else {
                    continue;
                };
                for set in centralized_sets(beta, cfg, k_c)? {
                    out.push(fill(beta, set, k_d));
                }
            }
            // Pure centralized endpoint. Informed methods fall back to the
            // strongest users, random grouping keeps its own draw.
            let ends = if cfg.method == GroupingMethod::Random {
                centralized_sets(beta, cfg, kmax_c)?
            } else {
                vec![lsf_ranking(beta)[..kmax_c].to_vec()]
            };
            for set in ends {
                let g = fill(beta, set, 0);
                if !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        SweepMode::ServeAll => {
            let Some(kmax_c) = fronthaul::serve_all_max_centralized(fp, fh, k, cfg.swap_rates)
            else {
                return Ok(out);
            };
            for k_c in 0..=kmax_c.min(k).min(params.num_aps * l) {
                let k_d = k - k_c;
                if (k_d > 0 && k_d >= l) || !fronthaul::check_constraint(k_c, k_d, fp, fh) {
                    continue;
                }
                for set in centralized_sets(beta, cfg, k_c)? {
                    out.push(fill(beta, set, k_d));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: Evaluation,
    /// Every candidate with its sum SE under the sweep allocation.
    pub candidates: Vec<(Grouping, f64)>,
}

fn argmax(evals: &[Evaluation]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in evals.iter().enumerate() {
        // Strict improvement only, so ties go to the earlier (smaller K_c) one.
        if best.is_none_or(|b| e.report.sum_se > evals[b].report.sum_se) {
            best = Some(i);
        }
    }
    best
}

/// Sweeps `K_c` and returns the grouping with the largest sum SE. QoS does
/// not enter the selection; the returned report flags it.
pub fn sweep_select(eval: &Evaluator<'_>, cfg: &SweepConfig) -> Result<Option<SweepOutcome>> {
    let candidates = sweep_candidates(&eval.stats.beta, eval.params, eval.fp, cfg)?;
    let full = cfg.alloc == AllocMode::FullOpa;
    let evals = candidates
        .iter()
        .map(|g| eval.evaluate(g, full))
        .collect::<Result<Vec<_>>>()?;
    let Some(win) = argmax(&evals) else {
        return Ok(None);
    };
    let scores = evals
        .iter()
        .map(|e| (e.grouping.clone(), e.report.sum_se))
        .collect();
    let best = if cfg.alloc == AllocMode::Opa {
        let mut finalists = vec![&candidates[win]];
        for g in &candidates {
            let pure = g.k_c() == 0 || g.k_d() == 0;
            if pure && !finalists.contains(&g) {
                finalists.push(g);
            }
        }
        let refined = finalists
            .into_iter()
            .map(|g| eval.opa(g))
            .collect::<Result<Vec<_>>>()?;
        let i = argmax(&refined).expect("at least the winner");
        refined.into_iter().nth(i).unwrap()
    } else {
        evals.into_iter().nth(win).unwrap()
    };
    Ok(Some(SweepOutcome {
        best,
        candidates: scores,
    }))
}
