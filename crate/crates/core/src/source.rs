//! D2D source domain modelled as a Chinese restaurant process.
//!
//! Customers are users, tables are contents. Repeated sessions share one
//! occupancy table, so a content's pull reflects every earlier selection.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::ratings::{Rating, RatingsMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpConfig {
    /// Concentration `β`.
    pub beta: f64,
    /// Number of users `N_D2D`.
    pub n_customers: usize,
    /// Selections made by each user.
    pub n_rounds: usize,
    /// Contents without viewing history, appended as empty columns.
    pub unseen_contents: usize,
}

impl CrpConfig {
    pub fn new(beta: f64, n_customers: usize, n_rounds: usize) -> Result<Self> {
        let cfg = Self { beta, n_customers, n_rounds, unseen_contents: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::invalid(format!("CRP concentration must be positive, got {}", self.beta)));
        }
        if self.n_customers == 0 || self.n_rounds == 0 {
            return Err(Error::invalid("CRP needs at least one customer and one round"));
        }
        Ok(())
    }

    pub fn selections(&self) -> usize {
        self.n_customers * self.n_rounds
    }
}

/// Table chosen by every selection, in seating order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeatingOutcome {
    assignment: Vec<usize>,
    occupancy: Vec<usize>,
}

impl SeatingOutcome {
    /// Builds an outcome from a table sequence in which every new table gets
    /// the next unused index.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let mut occupancy: Vec<usize> = Vec::new();
        for &table in &assignment {
            match table.cmp(&occupancy.len()) {
                std::cmp::Ordering::Less => occupancy[table] += 1,
                std::cmp::Ordering::Equal => occupancy.push(1),
                std::cmp::Ordering::Greater => {
                    return Err(Error::invalid(format!(
                        "table {table} opened before table {}",
                        occupancy.len()
                    )))
                }
            }
        }
        Ok(Self { assignment, occupancy })
    }

    /// Outcome described only by its table counts `m_f`.
    pub fn from_occupancy(occupancy: Vec<usize>) -> Self {
        Self { assignment: Vec::new(), occupancy }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Occupants `m_f` of every occupied table.
    pub fn occupancy(&self) -> &[usize] {
        &self.occupancy
    }

    /// Number of occupied tables `F_h`.
    pub fn occupied_tables(&self) -> usize {
        self.occupancy.len()
    }

    pub fn selections(&self) -> usize {
        self.occupancy.iter().sum()
    }
}

/// Seats `n_customers · n_rounds` selections, round by round.
///
/// With `k` selections already seated, the next one joins occupied table `t`
/// with probability `m_t / (k + β)` and opens a new table with probability
/// `β / (k + β)`.
pub fn crp_sample<R: Rng + ?Sized>(cfg: &CrpConfig, rng: &mut R) -> Result<SeatingOutcome> {
    cfg.validate()?;
    let total = cfg.selections();
    let mut assignment = Vec::with_capacity(total);
    let mut occupancy: Vec<usize> = Vec::new();
    for k in 0..total {
        let u = rng.gen::<f64>() * (k as f64 + cfg.beta);
        let mut acc = 0.0;
        let mut chosen = occupancy.len();
        for (t, &m) in occupancy.iter().enumerate() {
            acc += m as f64;
            if u < acc {
                chosen = t;
                break;
            }
        }
        if chosen == occupancy.len() {
            occupancy.push(0);
        }
        occupancy[chosen] += 1;
        assignment.push(chosen);
    }
    Ok(SeatingOutcome { assignment, occupancy })
}

/// Log-probability of a seating under concentration `beta`:
/// `F_h ln β + ln Γ(β) − ln Γ(β + N) + Σ_f ln (m_f − 1)!`.
pub fn crp_log_prob(outcome: &SeatingOutcome, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("CRP concentration must be positive, got {beta}")));
    }
    if outcome.occupancy.contains(&0) {
        return Err(Error::invalid("every occupied table needs at least one customer"));
    }
    let n = outcome.selections() as f64;
    let tables = outcome.occupied_tables() as f64;
    let log_factorials: f64 = outcome.occupancy.iter().map(|&m| ln_gamma(m as f64)).sum();
    Ok(tables * beta.ln() + ln_gamma(beta) - ln_gamma(beta + n) + log_factorials)
}

/// Source-domain ratings: user `n` rates content `f` with the fraction of its
/// `n_rounds` selections that went to table `f`.
///
/// Columns are the opened tables ranked by occupancy (ties to the earlier
/// table), followed by `unseen_contents` empty ones.
pub fn crp_to_ratings<T: Scalar, R: Rng + ?Sized>(
    cfg: &CrpConfig,
    rng: &mut R,
) -> Result<RatingsMatrix<T>> {
    let outcome = crp_sample(cfg, rng)?;
    let tables = outcome.occupied_tables();
    let column = popularity_order(outcome.occupancy());
    let mut counts = vec![0usize; cfg.n_customers * tables];
    for (k, &table) in outcome.assignment().iter().enumerate() {
        let user = k % cfg.n_customers;
        counts[user * tables + column[table]] += 1;
    }
    let per_round = T::one() / T::of_usize(cfg.n_rounds);
    let triplets = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(cell, &c)| Rating {
            user: cell / tables,
            content: cell % tables,
            value: T::of_usize(c) * per_round,
        })
        .collect();
    RatingsMatrix::new(cfg.n_customers, tables + cfg.unseen_contents, triplets)
}

/// Column of every table when tables are ranked by descending occupancy.
fn popularity_order(occupancy: &[usize]) -> Vec<usize> {
    let mut by_rank: Vec<usize> = (0..occupancy.len()).collect();
    by_rank.sort_by(|&a, &b| occupancy[b].cmp(&occupancy[a]).then(a.cmp(&b)));
    let mut column = vec![0; occupancy.len()];
    for (rank, &table) in by_rank.iter().enumerate() {
        column[table] = rank;
    }
    column
}
