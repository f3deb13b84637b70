//! Target-domain demand: Zipf popularity, per-user preference matrices,
//! Poisson request traces and sparse training ratings.

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};
use crate::ratings::{Rating, RatingsMatrix};
use crate::scalar::Scalar;

/// Zipf-like pmf `Ω / f^alpha` over contents `1..=catalog_size`.
pub fn zipf_pmf<T: Scalar>(alpha: T, catalog_size: usize) -> Result<Vec<T>> {
    if catalog_size == 0 {
        return Err(Error::invalid("Zipf catalog size must be positive"));
    }
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::invalid(format!("Zipf exponent must be finite and >= 0, got {alpha}")));
    }
    let weights: Vec<T> = (1..=catalog_size)
        .map(|f| T::of_usize(f).powf(-alpha))
        .collect();
    let omega = T::one() / weights.iter().copied().sum::<T>();
    Ok(weights.into_iter().map(|w| w * omega).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfLaw<T> {
    alpha: T,
    pmf: Vec<T>,
}

impl<T: Scalar> ZipfLaw<T> {
    pub fn new(alpha: T, catalog_size: usize) -> Result<Self> {
        let pmf = zipf_pmf(alpha, catalog_size)?;
        Ok(Self { alpha, pmf })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn catalog_size(&self) -> usize {
        self.pmf.len()
    }

    /// Probabilities indexed by 0-based popularity rank.
    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }
}

/// Fixed user → station assignment of one realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    station_of: Vec<usize>,
    n_stations: usize,
}

impl Association {
    pub fn new(station_of: Vec<usize>, n_stations: usize) -> Result<Self> {
        if n_stations == 0 {
            return Err(Error::invalid("need at least one station"));
        }
        if let Some(&bad) = station_of.iter().find(|&&m| m >= n_stations) {
            return Err(Error::invalid(format!("station {bad} out of range 0..{n_stations}")));
        }
        Ok(Self { station_of, n_stations })
    }

    /// Each user picks a station uniformly at random.
    pub fn uniform<R: Rng + ?Sized>(n_users: usize, n_stations: usize, rng: &mut R) -> Result<Self> {
        if n_stations == 0 {
            return Err(Error::invalid("need at least one station"));
        }
        let station_of = (0..n_users).map(|_| rng.gen_range(0..n_stations)).collect();
        Self::new(station_of, n_stations)
    }

    pub fn n_users(&self) -> usize {
        self.station_of.len()
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn station_of(&self, user: usize) -> usize {
        self.station_of[user]
    }

    pub fn users_of(&self, station: usize) -> impl Iterator<Item = usize> + '_ {
        self.station_of
            .iter()
            .enumerate()
            .filter(move |(_, &m)| m == station)
            .map(|(n, _)| n)
    }
}

/// Request probabilities `P[n, f]` of a population of users; the grand sum is 1.
///
/// `station` is `None` for the network-wide matrix produced by
/// [`make_popularity`] and `Some(m)` for a per-station view.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityMatrix<T> {
    station: Option<usize>,
    user_ids: Vec<usize>,
    entries: Array2<T>,
}

impl<T: Scalar> PopularityMatrix<T> {
    pub fn new(entries: Array2<T>) -> Result<Self> {
        let (n_users, n_contents) = entries.dim();
        if n_users == 0 || n_contents == 0 {
            return Err(Error::invalid("popularity matrix is empty"));
        }
        if entries.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(Error::invalid("popularity entries must be finite and non-negative"));
        }
        let total = entries.sum().to_f64_lossy();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("popularity must sum to 1, got {total}")));
        }
        Ok(Self { station: None, user_ids: (0..n_users).collect(), entries })
    }

    pub fn station(&self) -> Option<usize> {
        self.station
    }

    /// Network-wide user index of each row.
    pub fn user_ids(&self) -> &[usize] {
        &self.user_ids
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn n_users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_contents(&self) -> usize {
        self.entries.ncols()
    }

    /// Entries multiplied by the number of rows, so each row is that user's pmf.
    pub fn per_user(&self) -> Array2<T> {
        let scale = T::of_usize(self.n_users());
        self.entries.mapv(|p| p * scale)
    }

    /// Rows of the users associated with `station`, renormalized to sum to 1.
    ///
    /// Returns `None` when no user is associated with the station.
    pub fn station_view(&self, station: usize, assoc: &Association) -> Option<Self> {
        let rows: Vec<usize> = assoc.users_of(station).collect();
        if rows.is_empty() {
            return None;
        }
        let mut entries = self.entries.select(ndarray::Axis(0), &rows);
        let total = entries.sum();
        entries.mapv_inplace(|p| p / total);
        let user_ids = rows.iter().map(|&r| self.user_ids[r]).collect();
        Some(Self { station: Some(station), user_ids, entries })
    }
}

/// Builds the network-wide ground-truth popularity.
///
/// Each user's row is the Zipf pmf laid over a user-specific ranking of the
/// catalog. The ranking starts from the global order `0..F` and receives
/// `⌊(1 − coherence)·F⌋` adjacent swaps at uniformly chosen positions;
/// `coherence == 0` draws an independent uniform permutation instead. Rows are
/// scaled by `1 / n_users`.
pub fn make_popularity<T: Scalar, R: Rng + ?Sized>(
    zipf: &ZipfLaw<T>,
    n_users: usize,
    coherence: f64,
    rng: &mut R,
) -> Result<PopularityMatrix<T>> {
    if n_users == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    if !(0.0..=1.0).contains(&coherence) {
        return Err(Error::invalid(format!("coherence must lie in [0, 1], got {coherence}")));
    }
    let n_contents = zipf.catalog_size();
    let swaps = ((1.0 - coherence) * n_contents as f64).floor() as usize;
    let row_scale = T::one() / T::of_usize(n_users);
    let mut entries = Array2::zeros((n_users, n_contents));
    let mut ranking: Vec<usize> = Vec::with_capacity(n_contents);
    for n in 0..n_users {
        ranking.clear();
        ranking.extend(0..n_contents);
        if coherence == 0.0 {
            ranking.shuffle(rng);
        } else if n_contents > 1 {
            for _ in 0..swaps {
                let pos = rng.gen_range(0..n_contents - 1);
                ranking.swap(pos, pos + 1);
            }
        }
        for (rank, &content) in ranking.iter().enumerate() {
            entries[(n, content)] = zipf.pmf()[rank] * row_scale;
        }
    }
    Ok(PopularityMatrix { station: None, user_ids: (0..n_users).collect(), entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    /// Arrival slot `τ`, in `0..horizon`.
    pub slot: usize,
    pub user: usize,
    pub station: usize,
    pub content: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequestTrace {
    requests: Vec<Request>,
    horizon: usize,
}

impl RequestTrace {
    pub fn new(requests: Vec<Request>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least one slot"));
        }
        if requests.windows(2).any(|w| w[0].slot > w[1].slot) {
            return Err(Error::invalid("requests must be ordered by arrival slot"));
        }
        if let Some(r) = requests.iter().find(|r| r.slot >= horizon) {
            return Err(Error::invalid(format!("arrival slot {} beyond horizon {horizon}", r.slot)));
        }
        Ok(Self { requests, horizon })
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

/// Draws a network-wide Poisson(`lambda`) number of arrivals per slot.
///
/// Each arrival picks its user from the row marginals of `pop` and its content
/// from that user's conditional row; the station is the user's associated one.
pub fn sample_trace<T: Scalar, R: Rng + ?Sized>(
    pop: &PopularityMatrix<T>,
    assoc: &Association,
    lambda: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<RequestTrace> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("traffic intensity must be positive, got {lambda}")));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least one slot"));
    }
    if assoc.n_users() < pop.user_ids().iter().max().map_or(0, |&u| u + 1) {
        return Err(Error::invalid("association does not cover every user of the popularity matrix"));
    }
    let row_mass: Vec<f64> = pop
        .entries()
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|p| p.to_f64_lossy()).sum())
        .collect();
    let user_dist = WeightedIndex::new(&row_mass)
        .map_err(|e| Error::invalid(format!("popularity matrix has no mass: {e}")))?;
    let content_dists: Vec<Option<WeightedIndex<f64>>> = pop
        .entries()
        .rows()
        .into_iter()
        .map(|row| WeightedIndex::new(row.iter().map(|p| p.to_f64_lossy())).ok())
        .collect();
    let arrivals = Poisson::new(lambda).map_err(|e| Error::invalid(e.to_string()))?;

    let mut requests = Vec::new();
    for slot in 0..horizon {
        let count = arrivals.sample(rng) as usize;
        for _ in 0..count {
            let row = user_dist.sample(rng);
            let content = content_dists[row]
                .as_ref()
                .expect("rows with mass have a content distribution")
                .sample(rng);
            let user = pop.user_ids()[row];
            requests.push(Request { slot, user, station: assoc.station_of(user), content });
        }
    }
    RequestTrace::new(requests, horizon)
}

/// Samples `round(density · N · F)` distinct cells uniformly without
/// replacement and reports their per-user-scale popularity as ratings.
///
/// The cells are a prefix of one seed-determined shuffle, so for a fixed seed
/// a lower density always yields a subset of a higher one.
pub fn sparsify<T: Scalar, R: Rng + ?Sized>(
    pop: &PopularityMatrix<T>,
    density: f64,
    rng: &mut R,
) -> Result<RatingsMatrix<T>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1], got {density}")));
    }
    let (n_users, n_contents) = pop.entries().dim();
    let mut cells: Vec<usize> = (0..n_users * n_contents).collect();
    cells.shuffle(rng);
    let count = (density * cells.len() as f64).round() as usize;
    let per_user = pop.per_user();
    let triplets = cells[..count]
        .iter()
        .map(|&c| (c / n_contents, c % n_contents))
        .map(|(user, content)| Rating { user, content, value: per_user[(user, content)] })
        .filter(|r| r.value != T::zero())
        .collect();
    RatingsMatrix::new(n_users, n_contents, triplets)
}

/// Per-content size `L(f)` in Mbit and bitrate `B(f)` in Mbit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog<T> {
    sizes: Vec<T>,
    bitrates: Vec<T>,
}

impl<T: Scalar> Catalog<T> {
    pub fn new(sizes: Vec<T>, bitrates: Vec<T>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != bitrates.len() {
            return Err(Error::invalid("catalog sizes and bitrates must be non-empty and aligned"));
        }
        let positive = |v: &T| *v > T::zero() && v.is_finite();
        if !sizes.iter().all(positive) || !bitrates.iter().all(positive) {
            return Err(Error::invalid("content sizes and bitrates must be positive"));
        }
        Ok(Self { sizes, bitrates })
    }

    pub fn uniform(n_contents: usize, size: T, bitrate: T) -> Result<Self> {
        Self::new(vec![size; n_contents], vec![bitrate; n_contents])
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn size(&self, content: usize) -> T {
        self.sizes[content]
    }

    pub fn bitrate(&self, content: usize) -> T {
        self.bitrates[content]
    }

    pub fn size_bounds(&self) -> (T, T) {
        bounds(&self.sizes)
    }

    pub fn bitrate_bounds(&self) -> (T, T) {
        bounds(&self.bitrates)
    }
}

fn bounds<T: Scalar>(values: &[T]) -> (T, T) {
    values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
