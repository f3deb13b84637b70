//! Storage-feasible cache placement.
//!
//! The four compared policies are compositions of these pieces: ground truth
//! and both learned estimators rank contents with [`station_scores`] and fill
//! caches with [`place_greedy`]; the random baseline uses [`place_random`].

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::demand::{Association, Catalog};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary station × content placement `x[m, f]` and the budgets it respects.
#[derive(Debug, Clone, PartialEq)]
pub struct CachePlan<T> {
    x: Array2<bool>,
    budgets: Vec<T>,
}

impl<T: Scalar> CachePlan<T> {
    /// Validates `Σ_f L(f) x[m, f] ≤ S_m` for every station.
    pub fn new(x: Array2<bool>, budgets: Vec<T>, catalog: &Catalog<T>) -> Result<Self> {
        if x.nrows() != budgets.len() || x.ncols() != catalog.len() {
            return Err(Error::invalid("plan, budgets and catalog dimensions disagree"));
        }
        check_budgets(&budgets)?;
        for (m, row) in x.rows().into_iter().enumerate() {
            let used = row
                .iter()
                .enumerate()
                .filter(|(_, &c)| c)
                .fold(T::zero(), |acc, (f, _)| acc + catalog.size(f));
            if !fits(used, budgets[m]) {
                return Err(Error::invalid(format!(
                    "station {m} stores {used} Mbit over its {} Mbit budget",
                    budgets[m]
                )));
            }
        }
        Ok(Self { x, budgets })
    }

    /// A plan that caches nothing.
    pub fn empty(n_stations: usize, n_contents: usize) -> Self {
        Self { x: Array2::from_elem((n_stations, n_contents), false), budgets: vec![T::zero(); n_stations] }
    }

    pub fn is_cached(&self, station: usize, content: usize) -> bool {
        self.x[(station, content)]
    }

    pub fn matrix(&self) -> &Array2<bool> {
        &self.x
    }

    pub fn budgets(&self) -> &[T] {
        &self.budgets
    }

    pub fn n_stations(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_contents(&self) -> usize {
        self.x.ncols()
    }

    pub fn cached_contents(&self, station: usize) -> Vec<usize> {
        self.x
            .row(station)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(f, _)| f)
            .collect()
    }

    /// True when every content cached here is also cached in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.x.dim() == other.x.dim() && self.x.iter().zip(other.x.iter()).all(|(&a, &b)| !a || b)
    }
}

fn fits<T: Scalar>(used: T, budget: T) -> bool {
    used <= budget + budget.abs() * T::of(1e-12)
}

fn check_budgets<T: Scalar>(budgets: &[T]) -> Result<()> {
    if let Some(b) = budgets.iter().find(|b| !(**b >= T::zero())) {
        return Err(Error::invalid(format!("storage budget must be non-negative, got {b}")));
    }
    Ok(())
}

/// Per station, admits contents in descending score order (ties to the lower
/// index) while they fit; a content too large for the remaining space is
/// skipped and the scan continues.
pub fn place_greedy<T: Scalar>(scores: &[Vec<T>], catalog: &Catalog<T>, budgets: &[T]) -> Result<CachePlan<T>> {
    check_budgets(budgets)?;
    if scores.len() != budgets.len() {
        return Err(Error::invalid("one score vector per station is required"));
    }
    let n_contents = catalog.len();
    let mut x = Array2::from_elem((budgets.len(), n_contents), false);
    for (m, station_scores) in scores.iter().enumerate() {
        if station_scores.len() != n_contents {
            return Err(Error::invalid(format!("station {m} scores {} contents, catalog has {n_contents}", station_scores.len())));
        }
        if station_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("station {m} has non-finite scores")));
        }
        let mut order: Vec<usize> = (0..n_contents).collect();
        order.sort_by(|&a, &b| {
            station_scores[b]
                .partial_cmp(&station_scores[a])
                .expect("finite scores")
                .then(a.cmp(&b))
        });
        let mut used = T::zero();
        for f in order {
            let next = used + catalog.size(f);
            if fits(next, budgets[m]) {
                x[(m, f)] = true;
                used = next;
            }
        }
    }
    CachePlan::new(x, budgets.to_vec(), catalog)
}

/// Per station, draws contents uniformly without replacement until the next
/// draw no longer fits.
pub fn place_random<T: Scalar, R: Rng + ?Sized>(
    catalog: &Catalog<T>,
    budgets: &[T],
    rng: &mut R,
) -> Result<CachePlan<T>> {
    check_budgets(budgets)?;
    let n_contents = catalog.len();
    let mut x = Array2::from_elem((budgets.len(), n_contents), false);
    let mut order: Vec<usize> = (0..n_contents).collect();
    for (m, &budget) in budgets.iter().enumerate() {
        order.shuffle(rng);
        let mut used = T::zero();
        for &f in &order {
            let next = used + catalog.size(f);
            if !fits(next, budget) {
                break;
            }
            x[(m, f)] = true;
            used = next;
        }
    }
    CachePlan::new(x, budgets.to_vec(), catalog)
}

/// How user-level predictions become station-level content scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreScope {
    /// Mean over the users associated with each station.
    #[default]
    PerStation,
    /// Every station uses the mean over all users.
    Global,
}

/// Station `m`'s score for content `f` is the mean prediction over the users
/// associated with `m`; a station without users falls back to the mean over
/// all users.
pub fn station_scores<T: Scalar>(pred: &Array2<T>, assoc: &Association) -> Result<Vec<Vec<T>>> {
    scores_with_scope(pred, assoc, ScoreScope::PerStation)
}

pub fn scores_with_scope<T: Scalar>(
    pred: &Array2<T>,
    assoc: &Association,
    scope: ScoreScope,
) -> Result<Vec<Vec<T>>> {
    if pred.nrows() != assoc.n_users() {
        return Err(Error::invalid(format!(
            "{} prediction rows for {} associated users",
            pred.nrows(),
            assoc.n_users()
        )));
    }
    if pred.nrows() == 0 {
        return Err(Error::invalid("no users to score"));
    }
    let global = column_mean(pred, &(0..pred.nrows()).collect::<Vec<_>>());
    Ok((0..assoc.n_stations())
        .map(|m| {
            let users: Vec<usize> = assoc.users_of(m).collect();
            if scope == ScoreScope::Global || users.is_empty() {
                global.clone()
            } else {
                column_mean(pred, &users)
            }
        })
        .collect())
}

fn column_mean<T: Scalar>(pred: &Array2<T>, users: &[usize]) -> Vec<T> {
    let n = T::of_usize(users.len());
    let rows = pred.select(Axis(0), users);
    (0..pred.ncols())
        .map(|f| rows.column(f).iter().copied().fold(T::zero(), |a, v| a + v) / n)
        .collect()
}
