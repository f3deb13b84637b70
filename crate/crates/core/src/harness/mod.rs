//! Experiment orchestration: configuration, realizations, sweeps and the
//! CSV / SVG artifacts.

mod config;
mod output;
mod plot;
mod realization;
mod sweep;

pub use config::{ExperimentConfig, Policy, ScoreScopeConfig, SweepAxis};
pub use output::{emit_csv, write_csv, CSV_HEADER};
pub use plot::{emit_plot, render_svg};
pub use realization::{realization_artifacts, run_realization, trace_digest, RealizationArtifacts, RealizationResult, Realizer};
pub use sweep::{run_seed, run_sweep, run_sweep_with_log, GridPoint, PolicySummary, SeedRun, Summary, SweepResult};
