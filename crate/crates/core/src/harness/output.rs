//! Sweep CSV.

use std::io::Write;
use std::path::Path;

use super::sweep::SweepResult;
use crate::error::{Result, ResultExt};

pub const CSV_HEADER: [&str; 7] = ["axis", "value", "policy", "metric", "mean", "stderr", "realizations"];

/// One row per grid point, policy and metric, ordered by grid value, then
/// policy, then `eta` before `rho`.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    if result.points.is_empty() {
        log::warn!("{} sweep has no grid points; writing header only", result.axis);
    }
    for point in &result.points {
        for s in &point.policies {
            for (metric, summary) in [("eta", s.eta), ("rho", s.rho)] {
                w.write_record([
                    result.axis.name().to_string(),
                    point.value.to_string(),
                    s.policy.name().to_string(),
                    metric.to_string(),
                    summary.mean.to_string(),
                    summary.stderr.to_string(),
                    result.realizations.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(crate::Error::from).context(format!("creating {}", path.display()))?;
    write_csv(result, std::io::BufWriter::new(file)).context(format!("writing {}", path.display()))
}
