use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use edgecache::harness::{
    emit_csv, emit_plot, realization_artifacts, run_sweep_with_log, ExperimentConfig, SweepAxis,
};
use edgecache::oracle::{crp_oracle, gradient_oracle, placement_oracle, OracleReport};

/// Realizations used by `--quick`.
const QUICK_REALIZATIONS: usize = 50;

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Proactive small-cell caching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write CSV, SVG and a resumable realization log.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        sweep: SweepAxis,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "quick")]
        realizations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run 50 realizations.
        #[arg(long)]
        quick: bool,
        /// Also write per-request traces and fitted models of the first
        /// realization at the first grid point.
        #[arg(long)]
        dump: bool,
    },
    /// Check a config file and print the effective parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a brute-force reference suite.
    Oracle { suite: Suite },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Crp,
    Gradient,
    Placement,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: edgecache::Error| e.to_string())
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| Failure::Config(e.into()))
}

fn runtime<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, sweep, out, realizations, seed, quick, dump } => {
            run(&config, sweep, &out, realizations, seed, quick, dump)
        }
        Command::Validate { config } => validate(&config),
        Command::Oracle { suite } => oracle(suite),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(
    config: &Path,
    axis: SweepAxis,
    out: &Path,
    realizations: Option<usize>,
    seed: Option<u64>,
    quick: bool,
    dump: bool,
) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if quick {
        cfg.realizations = QUICK_REALIZATIONS;
    }
    if let Some(r) = realizations {
        cfg.realizations = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let grid = match (&cfg.grid, cfg.sweep) {
        (Some(grid), Some(a)) if a == axis => grid.clone(),
        (Some(grid), None) => grid.clone(),
        _ => axis.default_grid(),
    };
    cfg.sweep = Some(axis);
    cfg.grid = Some(grid.clone());
    cfg.validate().map_err(|e| Failure::Config(e.into()))?;
    for &v in &grid {
        axis.apply(&cfg, v)
            .validate()
            .map_err(|e| Failure::Config(anyhow::Error::from(e).context(format!("{axis} = {v}"))))?;
    }

    runtime(std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())))?;
    runtime(
        std::fs::write(out.join(format!("{axis}.config.toml")), cfg.to_toml())
            .context("writing the effective config"),
    )?;
    log::info!("{axis} sweep over {} points, {} realizations, seed {}", grid.len(), cfg.realizations, cfg.seed);
    let result = runtime(
        run_sweep_with_log(&cfg, axis, &grid, Some(&out.join(format!("{axis}.log")))).map_err(Into::into),
    )?;
    let csv = out.join(format!("{axis}.csv"));
    let svg = out.join(format!("{axis}.svg"));
    runtime(emit_csv(&result, &csv).map_err(Into::into))?;
    runtime(emit_plot(&result, &svg).map_err(Into::into))?;
    println!("wrote {} and {}", csv.display(), svg.display());

    if dump {
        let first = axis.apply(&cfg, grid[0]);
        let art = runtime(realization_artifacts(&first, cfg.seed).map_err(Into::into))?;
        let dir = out.join(format!("{axis}.dump"));
        runtime(std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())))?;
        for (policy, report) in &art.reports {
            let path = dir.join(format!("trace_{policy}.csv"));
            let file = runtime(std::fs::File::create(&path).with_context(|| format!("creating {}", path.display())))?;
            runtime(report.write_csv(std::io::BufWriter::new(file)).map_err(Into::into))?;
        }
        for (name, model) in [("cf", &art.cf_model), ("tl", &art.tl_model)] {
            if let Some(model) = model {
                let path = dir.join(format!("model_{name}.txt"));
                let file = runtime(std::fs::File::create(&path).with_context(|| format!("creating {}", path.display())))?;
                runtime(model.write_text(std::io::BufWriter::new(file)).map_err(Into::into))?;
            }
        }
        println!("wrote realization dump to {}", dir.display());
    }
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    println!("{}: ok", config.display());
    print!("{}", cfg.to_toml());
    Ok(())
}

fn oracle(suite: Suite) -> Result<(), Failure> {
    let report: OracleReport = match suite {
        Suite::Crp => runtime(crp_oracle(6, &[0.5, 1.0, 2.0, 10.0]).map_err(Into::into))?,
        Suite::Gradient => gradient_oracle(50, 0),
        Suite::Placement => runtime(placement_oracle(200, 12, 0).map_err(Into::into))?,
    };
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {}: {} cases, worst error {:.3e} (tolerance {:.0e})",
        report.name, report.cases, report.worst_error, report.tolerance
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow::anyhow!("{} oracle exceeded its tolerance", report.name)))
    }
}
