//! Config loading and CSV output for the `cfmimo` binary.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cfmimo_core::experiment::{ComplexityRow, ExperimentConfig, ExperimentResult, Row, SweepAxis};
use cfmimo_core::{Objective, SweepMode};

/// A TOML run file: the experiment plus where to put the CSVs.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub out: PathBuf,
    pub experiment: ExperimentConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub drops: Option<usize>,
    pub out: Option<PathBuf>,
    pub mode: Option<SweepMode>,
    pub sweep: Option<SweepAxis>,
    pub objective: Option<Objective>,
    pub fig3_kmax_compat: bool,
}

/// Parses a run file. Unknown keys are errors.
pub fn parse_run_file(text: &str) -> Result<RunFile> {
    let mut table: toml::Table = toml::from_str(text)?;
    let out = match table.remove("out") {
        None => PathBuf::from("out"),
        Some(toml::Value::String(s)) => PathBuf::from(s),
        Some(v) => bail!("`out` must be a string, got {v}"),
    };
    let experiment = ExperimentConfig::deserialize(table)?;
    Ok(RunFile { out, experiment })
}

pub fn load(path: &Path, o: &Overrides) -> Result<RunFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut run = parse_run_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    apply(&mut run, o)?;
    run.experiment.validate()?;
    Ok(run)
}

pub fn apply(run: &mut RunFile, o: &Overrides) -> Result<()> {
    let cfg = &mut run.experiment;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(d) = o.drops {
        cfg.n_drops = d;
    }
    if let Some(m) = o.mode {
        cfg.mode = m;
    }
    if let Some(obj) = o.objective {
        cfg.objective = obj;
    }
    if o.fig3_kmax_compat {
        cfg.fig3_kmax_compat = true;
    }
    if let Some(axis) = o.sweep {
        if axis != cfg.sweep.axis {
            bail!(
                "--sweep {} disagrees with the config's sweep axis",
                axis_name(axis)
            );
        }
    }
    if let Some(out) = &o.out {
        run.out = out.clone();
    }
    Ok(())
}

pub fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Fronthaul => "fh",
        SweepAxis::Antennas => "L",
    }
}

fn method_name(r: &Row) -> &'static str {
    r.method.map_or("-", |m| m.name())
}

/// Per-drop rows.
pub fn write_rows<W: std::io::Write>(w: W, res: &ExperimentResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sweep_value",
        "drop_id",
        "scheme",
        "grouping_method",
        "alloc",
        "K_c",
        "K_d",
        "sum_se",
        "min_user_se",
        "feasible",
        "fh_used_max_ap",
        "sca_iters",
        "wall_time_ms",
    ])?;
    for r in &res.rows {
        out.write_record([
            r.sweep_value.to_string(),
            r.drop_id.to_string(),
            r.scheme.name().into(),
            method_name(r).into(),
            r.alloc.name().into(),
            r.k_c.to_string(),
            r.k_d.to_string(),
            r.sum_se.to_string(),
            r.min_user_se.to_string(),
            r.feasible.to_string(),
            r.fh_used_max_ap.bps().to_string(),
            r.sca_iters.to_string(),
            r.wall_time_ms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregate<W: std::io::Write>(w: W, res: &ExperimentResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sweep_value",
        "scheme",
        "grouping_method",
        "alloc",
        "n_drops",
        "mean_sum_se",
        "mean_min_user_se",
        "feasible_fraction",
        "mean_K_c",
        "mean_K_d",
    ])?;
    for a in &res.aggregate {
        out.write_record([
            a.sweep_value.to_string(),
            a.scheme.name().into(),
            a.method.map_or("-", |m| m.name()).into(),
            a.alloc.name().into(),
            a.n_drops.to_string(),
            a.mean_sum_se.to_string(),
            a.mean_min_user_se.to_string(),
            a.feasible_fraction.to_string(),
            a.mean_k_c.to_string(),
            a.mean_k_d.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows that carry an oracle check. Returns how many were written.
pub fn write_oracle<W: std::io::Write>(w: W, res: &ExperimentResult) -> Result<usize> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sweep_value",
        "drop_id",
        "scheme",
        "grouping_method",
        "alloc",
        "max_rel_err",
    ])?;
    let mut n = 0;
    for r in &res.rows {
        let Some(err) = r.oracle_max_rel_err else {
            continue;
        };
        out.write_record([
            r.sweep_value.to_string(),
            r.drop_id.to_string(),
            r.scheme.name().into(),
            method_name(r).into(),
            r.alloc.name().into(),
            err.to_string(),
        ])?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Writes `per_drop.csv`, `aggregate.csv` and, when present, `oracle.csv`.
pub fn write_all(dir: &Path, res: &ExperimentResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let per_drop = dir.join("per_drop.csv");
    write_rows(fs::File::create(&per_drop)?, res)?;
    written.push(per_drop);
    let agg = dir.join("aggregate.csv");
    write_aggregate(fs::File::create(&agg)?, res)?;
    written.push(agg);
    if res.rows.iter().any(|r| r.oracle_max_rel_err.is_some()) {
        let path = dir.join("oracle.csv");
        write_oracle(fs::File::create(&path)?, res)?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_complexity<W: std::io::Write>(w: W, rows: &[ComplexityRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "scheme",
        "K_c",
        "K_d",
        "centralized_ops",
        "distributed_ops_per_ap",
        "fh_precoding_bps",
    ])?;
    for r in rows {
        out.write_record([
            r.scheme.name().to_string(),
            r.k_c.to_string(),
            r.k_d.to_string(),
            r.centralized_ops.to_string(),
            r.distributed_ops.to_string(),
            r.fh_precoding.bps().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
