//! Brute-force reference checks for the analytic pieces of the model.
//!
//! Each suite compares a fast implementation against exhaustive enumeration
//! or finite differences and reports the worst discrepancy it saw.

use ndarray::Array2;
use rand::Rng;

use crate::demand::Catalog;
use crate::error::Result;
use crate::factorization::{objective_and_gradient, FactorModel, TlWeights, TrainingSet};
use crate::placement::place_greedy;
use crate::ratings::Rating;
use crate::seed::SeedPlan;
use crate::source::{crp_log_prob, SeatingOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub cases: usize,
    pub worst_error: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.worst_error <= self.tolerance
    }
}

/// Every set partition of `n` items as a restricted-growth string: item `i`
/// joins block `a[i]`, and `a[i] ≤ 1 + max(a[..i])`.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, blocks: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=blocks {
            prefix.push(b);
            extend(prefix, blocks.max(b + 1), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), 0, n, &mut out);
    out
}

/// `Σ_Z exp(crp_log_prob(Z, β))` over all partitions of `n` customers.
pub fn crp_partition_mass(n: usize, beta: f64) -> Result<f64> {
    let mut total = 0.0;
    for assignment in set_partitions(n) {
        let outcome = SeatingOutcome::from_assignment(assignment)?;
        total += crp_log_prob(&outcome, beta)?.exp();
    }
    Ok(total)
}

/// Seating probabilities over all partitions sum to one for `N ≤ max_n`.
pub fn crp_oracle(max_n: usize, betas: &[f64]) -> Result<OracleReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=max_n {
        for &beta in betas {
            worst = worst.max((crp_partition_mass(n, beta)? - 1.0).abs());
            cases += 1;
        }
    }
    Ok(OracleReport { name: "crp partition mass", cases, worst_error: worst, tolerance: 1e-9 })
}

/// A random joint problem with a few users and contents on each side.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R) -> (FactorModel<f64>, TrainingSet<f64>, TlWeights<f64>) {
    let users = rng.gen_range(2..=6);
    let contents = rng.gen_range(2..=6);
    let k = rng.gen_range(1..=users.min(contents));
    let mut fill = |rows: usize| Array2::from_shape_fn((rows, k), |_| rng.gen_range(-1.0..1.0));
    let model = FactorModel::new(fill(users), fill(contents)).expect("shapes agree");
    let ratings = |density: f64, rng: &mut R| -> Vec<Rating<f64>> {
        let mut out = Vec::new();
        for user in 0..users {
            for content in 0..contents {
                if rng.gen_bool(density) {
                    out.push(Rating { user, content, value: rng.gen_range(0.01..1.0) });
                }
            }
        }
        out
    };
    let target = ratings(0.5, rng);
    let source = ratings(0.4, rng);
    let weights = TlWeights { alpha_source: rng.gen_range(0.0..2.0), alpha_target: rng.gen_range(0.1..2.0), mu: rng.gen_range(0.0..0.5) };
    (model, TrainingSet { target, source }, weights)
}

/// Relative error `‖g − ĝ‖₂ / ‖g‖₂` between the analytic gradient and central
/// differences with step `h`.
pub fn gradient_relative_error(
    model: &FactorModel<f64>,
    batch: &TrainingSet<f64>,
    weights: &TlWeights<f64>,
    h: f64,
) -> f64 {
    let (_, grad) = objective_and_gradient(model, batch, weights);
    let objective = |m: &FactorModel<f64>| objective_and_gradient(m, batch, weights).0;
    let mut diff2 = 0.0;
    let mut norm2 = 0.0;
    for block in 0..2 {
        let (rows, k) = if block == 0 { model.user_factors().dim() } else { model.content_factors().dim() };
        for i in 0..rows {
            for j in 0..k {
                let shifted = |delta: f64| {
                    let mut u = model.user_factors().clone();
                    let mut c = model.content_factors().clone();
                    if block == 0 {
                        u[(i, j)] += delta;
                    } else {
                        c[(i, j)] += delta;
                    }
                    objective(&FactorModel::new(u, c).expect("shapes agree"))
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let g = if block == 0 { grad.users[(i, j)] } else { grad.contents[(i, j)] };
                diff2 += (g - fd).powi(2);
                norm2 += g * g;
            }
        }
    }
    diff2.sqrt() / norm2.sqrt().max(1e-300)
}

pub fn gradient_oracle(instances: usize, seed: u64) -> OracleReport {
    let seeds = SeedPlan::new(seed);
    let worst = (0..instances)
        .map(|i| {
            let (model, batch, weights) = random_problem(&mut seeds.rng(&format!("gradient-{i}")));
            gradient_relative_error(&model, &batch, &weights, 1e-5)
        })
        .fold(0.0, f64::max);
    OracleReport { name: "factorization gradient", cases: instances, worst_error: worst, tolerance: 1e-5 }
}

/// Best total score of any subset of at most `capacity` contents.
pub fn best_subset_score(scores: &[f64], capacity: usize) -> f64 {
    let f = scores.len();
    (0u32..1 << f)
        .filter(|mask| mask.count_ones() as usize <= capacity)
        .map(|mask| (0..f).filter(|i| mask >> i & 1 == 1).map(|i| scores[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// With equal content sizes, greedy placement attains the enumerated optimum.
pub fn placement_oracle(instances: usize, max_contents: usize, seed: u64) -> Result<OracleReport> {
    let seeds = SeedPlan::new(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = seeds.rng(&format!("placement-{i}"));
        let f = rng.gen_range(1..=max_contents);
        let size = rng.gen_range(0.5..2.0);
        let scores: Vec<f64> = (0..f).map(|_| rng.gen_range(0.0..1.0)).collect();
        let slots = rng.gen_range(0..=f);
        let budget = size * slots as f64 + rng.gen_range(0.0..size * 0.99);
        let catalog = Catalog::uniform(f, size, 1.0)?;
        let plan = place_greedy(std::slice::from_ref(&scores), &catalog, &[budget])?;
        let greedy: f64 = plan.cached_contents(0).iter().map(|&c| scores[c]).sum();
        worst = worst.max((best_subset_score(&scores, slots) - greedy).abs());
    }
    Ok(OracleReport { name: "greedy placement", cases: instances, worst_error: worst, tolerance: 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b);
        }
    }

    #[test]
    fn suites_pass_at_small_size() {
        assert!(crp_oracle(4, &[0.5, 2.0]).unwrap().passed());
        assert!(gradient_oracle(5, 1).passed());
        assert!(placement_oracle(20, 8, 2).unwrap().passed());
    }
}
