use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cfmimo_cli::{load, write_all, write_complexity, Overrides};
use cfmimo_core::experiment::{complexity_report, run_experiment, SweepAxis};
use cfmimo_core::{FronthaulParams, Objective, SweepMode, SystemParams};

/// Number of worker threads; defaults to all cores.
const WORKERS_ENV: &str = "CFMIMO_WORKERS";

#[derive(Parser)]
#[command(
    name = "cfmimo",
    version,
    about = "Hybrid ZF experiments for fronthaul-limited cell-free massive MIMO"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        drops: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        sweep: Option<AxisArg>,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        /// Use the swapped-rate `K_max^c` formula in serve-all mode.
        #[arg(long)]
        fig3_kmax_compat: bool,
    },
    /// Print per-scheme computational and fronthaul cost at the reference setup.
    Complexity {
        /// Centralized group size of the hybrid row.
        #[arg(long, default_value_t = 10)]
        kc: usize,
        #[arg(long, default_value_t = 14)]
        antennas: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "capacity_limited")]
    CapacityLimited,
    #[value(name = "serve_all_K")]
    ServeAll,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    #[value(name = "fh")]
    Fh,
    #[value(name = "L")]
    L,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Geomean,
    Paper9a,
}

fn init_workers() -> Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .with_context(|| format!("{WORKERS_ENV}={v} is not a count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_workers()?;
    match cli.cmd {
        Cmd::Run {
            config,
            seed,
            drops,
            out,
            mode,
            sweep,
            objective,
            fig3_kmax_compat,
        } => {
            let o = Overrides {
                seed,
                drops,
                out,
                mode: mode.map(|m| match m {
                    ModeArg::CapacityLimited => SweepMode::CapacityLimited,
                    ModeArg::ServeAll => SweepMode::ServeAll,
                }),
                sweep: sweep.map(|a| match a {
                    AxisArg::Fh => SweepAxis::Fronthaul,
                    AxisArg::L => SweepAxis::Antennas,
                }),
                objective: objective.map(|o| match o {
                    ObjectiveArg::Geomean => Objective::GeoMean,
                    ObjectiveArg::Paper9a => Objective::Paper9a,
                }),
                fig3_kmax_compat,
            };
            let file = load(&config, &o)?;
            let res = run_experiment(&file.experiment)?;
            for path in write_all(&file.out, &res)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Cmd::Complexity { kc, antennas } => {
            let params = SystemParams {
                antennas,
                ..SystemParams::reference()
            };
            let rows = complexity_report(&params, &FronthaulParams::reference(antennas as u32), kc);
            write_complexity(std::io::stdout().lock(), &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
