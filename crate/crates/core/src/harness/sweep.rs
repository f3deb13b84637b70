//! Parameter sweeps over Monte Carlo realizations.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Policy, SweepAxis};
use super::realization::{RealizationResult, Realizer};
use crate::delivery::Metrics;
use crate::error::{Error, Result, ResultExt};

/// Sample mean and standard error `σ / √R` of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
}

impl Summary {
    /// Uses the `R − 1` sample variance; a single sample has zero error.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, stderr: (var / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySummary {
    pub policy: Policy,
    /// Satisfaction ratio.
    pub eta: Summary,
    /// Backhaul load.
    pub rho: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub policies: Vec<PolicySummary>,
}

impl GridPoint {
    pub fn get(&self, policy: Policy) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == policy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<GridPoint>,
    pub realizations: usize,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn policies(&self) -> Vec<Policy> {
        self.points.first().map(|p| p.policies.iter().map(|s| s.policy).collect()).unwrap_or_default()
    }

    /// Mean curve of one policy, `(value, summary)` per grid point.
    pub fn curve(&self, policy: Policy) -> Vec<(f64, PolicySummary)> {
        self.points.iter().filter_map(|p| p.get(policy).map(|s| (p.value, *s))).collect()
    }
}

/// Per-seed outcomes at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub points: Vec<RealizationResult>,
}

fn check_grid(cfg: &ExperimentConfig, axis: SweepAxis, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("sweep grid must be strictly increasing"));
    }
    for &v in grid {
        axis.apply(cfg, v).validate().context(format!("{axis} = {v}"))?;
    }
    Ok(())
}

/// All grid points for one seed, reusing stages across points.
pub fn run_seed(cfg: &ExperimentConfig, axis: SweepAxis, grid: &[f64], seed: u64) -> Result<SeedRun> {
    let mut realizer = Realizer::default();
    let points = grid
        .iter()
        .map(|&v| realizer.run(&axis.apply(cfg, v), seed).context(format!("seed {seed}, {axis} = {v}")))
        .collect::<Result<_>>()?;
    Ok(SeedRun { seed, points })
}

/// Averages `cfg.realizations` seeds `cfg.seed + i` at every grid point.
pub fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis, grid: &[f64]) -> Result<SweepResult> {
    run_sweep_with_log(cfg, axis, grid, None)
}

/// Like [`run_sweep`], appending every finished seed to `log`. Seeds already
/// recorded in a log written for the same config, axis and grid are read
/// back instead of recomputed.
pub fn run_sweep_with_log(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    grid: &[f64],
    log: Option<&Path>,
) -> Result<SweepResult> {
    check_grid(cfg, axis, grid)?;
    let policies = cfg.policy_order();
    let seeds: Vec<u64> = (0..cfg.realizations as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let fingerprint = fingerprint(cfg, axis, grid);

    let mut done = match log {
        Some(path) if path.exists() => read_log(path, &fingerprint, grid, &policies)?,
        _ => BTreeMap::new(),
    };
    done.retain(|seed, _| seeds.contains(seed));
    let writer = match log {
        Some(path) => Some(Mutex::new(open_log(path, &fingerprint, !done.is_empty())?)),
        None => None,
    };
    let todo: Vec<u64> = seeds.iter().copied().filter(|s| !done.contains_key(s)).collect();
    if !done.is_empty() {
        log::info!("resuming {axis} sweep: {} of {} seeds already logged", done.len(), seeds.len());
    }

    let finished = std::sync::atomic::AtomicUsize::new(done.len());
    let fresh: Vec<SeedRun> = todo
        .par_iter()
        .map(|&seed| {
            let run = run_seed(cfg, axis, grid, seed)?;
            if let Some(w) = &writer {
                let mut w = w.lock().expect("log writer poisoned");
                w.write_all(log_lines(&run, grid).as_bytes())?;
                w.flush()?;
            }
            let n = finished.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            if n % 100 == 0 || n == seeds.len() {
                log::info!("{axis} sweep: {n}/{} realizations", seeds.len());
            }
            Ok(run)
        })
        .collect::<Result<_>>()?;
    for run in fresh {
        done.insert(run.seed, run);
    }
    Ok(summarize(axis, grid, &policies, done.values()))
}

fn summarize<'a>(
    axis: SweepAxis,
    grid: &[f64],
    policies: &[Policy],
    runs: impl Iterator<Item = &'a SeedRun> + Clone,
) -> SweepResult {
    let realizations = runs.clone().count();
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let policies = policies
                .iter()
                .map(|&policy| {
                    let metrics: Vec<Metrics<f64>> = runs
                        .clone()
                        .map(|r| *r.points[i].metrics(policy).expect("policy simulated"))
                        .collect();
                    let eta: Vec<f64> = metrics.iter().map(|m| m.satisfaction_ratio).collect();
                    let rho: Vec<f64> = metrics.iter().map(|m| m.backhaul_load).collect();
                    PolicySummary { policy, eta: Summary::of(&eta), rho: Summary::of(&rho) }
                })
                .collect();
            GridPoint { value, policies }
        })
        .collect();
    SweepResult { axis, points, realizations }
}

fn fingerprint(cfg: &ExperimentConfig, axis: SweepAxis, grid: &[f64]) -> String {
    // Seed count is left out so a longer run can extend a shorter log.
    let mut base = cfg.clone();
    base.realizations = 1;
    base.sweep = Some(axis);
    base.grid = Some(grid.to_vec());
    let digest = Sha256::digest(base.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

const LOG_HEADER: &str = "# edgecache realization log";

fn open_log(path: &Path, fingerprint: &str, resume: bool) -> Result<File> {
    if resume {
        let ends_clean = std::fs::read(path)?.last() == Some(&b'\n');
        let mut f = OpenOptions::new().append(true).open(path)?;
        if !ends_clean {
            writeln!(f)?;
        }
        return Ok(f);
    }
    let mut f = File::create(path)?;
    writeln!(f, "{LOG_HEADER}")?;
    writeln!(f, "fingerprint {fingerprint}")?;
    f.flush()?;
    Ok(f)
}

/// One line per grid point: `seed point digest` followed by `policy eta rho`
/// triples, all written in a single call.
fn log_lines(run: &SeedRun, grid: &[f64]) -> String {
    let mut out = String::new();
    for (i, r) in run.points.iter().enumerate() {
        out.push_str(&format!("{} {} {} {}", run.seed, i, grid[i], r.trace_digest));
        for (p, m) in &r.outcomes {
            out.push_str(&format!(" {} {} {} {}", p.name(), m.satisfaction_ratio, m.backhaul_load, m.requests));
        }
        out.push('\n');
    }
    out
}

/// Seeds fully recorded in `path`; a log for another fingerprint is discarded.
fn read_log(path: &Path, fingerprint: &str, grid: &[f64], policies: &[Policy]) -> Result<BTreeMap<u64, SeedRun>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header_ok = lines.next().transpose()?.as_deref() == Some(LOG_HEADER);
    let fp_line = lines.next().transpose()?;
    if !header_ok || fp_line.as_deref() != Some(&format!("fingerprint {fingerprint}")) {
        log::warn!("{} belongs to a different run; starting over", path.display());
        return Ok(BTreeMap::new());
    }
    let mut partial: BTreeMap<u64, Vec<Option<RealizationResult>>> = BTreeMap::new();
    for line in lines {
        let line = line?;
        let Some((seed, idx, result)) = parse_log_line(&line, policies) else {
            // A torn final line from an interrupted run.
            continue;
        };
        if idx < grid.len() {
            partial.entry(seed).or_insert_with(|| vec![None; grid.len()])[idx] = Some(result);
        }
    }
    Ok(partial
        .into_iter()
        .filter_map(|(seed, points)| {
            let points: Option<Vec<_>> = points.into_iter().collect();
            points.map(|points| (seed, SeedRun { seed, points }))
        })
        .collect())
}

fn parse_log_line(line: &str, policies: &[Policy]) -> Option<(u64, usize, RealizationResult)> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 4 + 4 * policies.len() {
        return None;
    }
    let seed = fields[0].parse().ok()?;
    let idx = fields[1].parse().ok()?;
    let digest = fields[3].to_string();
    let mut outcomes = Vec::with_capacity(policies.len());
    for (chunk, &policy) in fields[4..].chunks(4).zip(policies) {
        if chunk[0] != policy.name() {
            return None;
        }
        let eta: f64 = chunk[1].parse().ok()?;
        let rho: f64 = chunk[2].parse().ok()?;
        let requests: usize = chunk[3].parse().ok()?;
        outcomes.push((
            policy,
            Metrics { satisfaction_ratio: eta, backhaul_load: rho, requests, degenerate: requests == 0 },
        ));
    }
    Some((seed, idx, RealizationResult { seed, trace_digest: digest, outcomes }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ExperimentConfig {
        ExperimentConfig { epochs: 40, realizations: 4, seed: 11, ..ExperimentConfig::default() }
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[0.3]).stderr, 0.0);
    }

    #[test]
    fn grid_must_be_sorted_and_non_empty() {
        assert!(run_sweep(&quick(), SweepAxis::Beta, &[]).is_err());
        assert!(run_sweep(&quick(), SweepAxis::Beta, &[5.0, 2.0]).is_err());
        assert!(run_sweep(&quick(), SweepAxis::Storage, &[0.0, 1.5]).is_ok());
        assert!(run_sweep(&quick(), SweepAxis::Correspondence, &[0.0, 1.5]).is_err());
    }

    #[test]
    fn resumed_sweep_matches_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("realizations.log");
        let cfg = quick();
        let grid = [0.25, 0.5];
        let full = run_sweep(&cfg, SweepAxis::Storage, &grid).unwrap();

        let short = ExperimentConfig { realizations: 2, ..cfg.clone() };
        run_sweep_with_log(&short, SweepAxis::Storage, &grid, Some(&log)).unwrap();
        // Simulate a torn write.
        OpenOptions::new().append(true).open(&log).unwrap().write_all(b"13 0 0.25 abc").unwrap();
        let resumed = run_sweep_with_log(&cfg, SweepAxis::Storage, &grid, Some(&log)).unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn foreign_log_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("realizations.log");
        std::fs::write(&log, "# edgecache realization log\nfingerprint 00\n11 0 0.5 x\n").unwrap();
        let cfg = quick();
        let a = run_sweep_with_log(&cfg, SweepAxis::Storage, &[0.5], Some(&log)).unwrap();
        assert_eq!(a, run_sweep(&cfg, SweepAxis::Storage, &[0.5]).unwrap());
    }
}
