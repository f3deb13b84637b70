//! Sparse observed ratings shared by the target and source domains.

use std::collections::HashSet;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating<T> {
    pub user: usize,
    pub content: usize,
    pub value: T,
}

/// Observed `(user, content, rating)` triplets of one information system.
///
/// Triplets are kept sorted by `(user, content)`; zero ratings are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix<T> {
    n_users: usize,
    n_contents: usize,
    triplets: Vec<Rating<T>>,
}

impl<T: Scalar> RatingsMatrix<T> {
    pub fn new(n_users: usize, n_contents: usize, mut triplets: Vec<Rating<T>>) -> Result<Self> {
        if n_users == 0 || n_contents == 0 {
            return Err(Error::invalid("ratings matrix needs at least one user and one content"));
        }
        let mut seen = HashSet::with_capacity(triplets.len());
        for t in &triplets {
            if t.user >= n_users || t.content >= n_contents {
                return Err(Error::invalid(format!(
                    "rating ({}, {}) outside {}x{}",
                    t.user, t.content, n_users, n_contents
                )));
            }
            if t.value == T::zero() {
                return Err(Error::invalid(format!(
                    "rating ({}, {}) is zero; zero ratings are unobserved",
                    t.user, t.content
                )));
            }
            if !seen.insert((t.user, t.content)) {
                return Err(Error::invalid(format!("duplicate rating ({}, {})", t.user, t.content)));
            }
        }
        triplets.sort_by_key(|t| (t.user, t.content));
        Ok(Self { n_users, n_contents, triplets })
    }

    /// Keeps every non-zero entry of a dense matrix.
    pub fn from_dense(dense: &Array2<T>) -> Result<Self> {
        let (n_users, n_contents) = dense.dim();
        let triplets = dense
            .indexed_iter()
            .filter(|(_, v)| **v != T::zero())
            .map(|((user, content), &value)| Rating { user, content, value })
            .collect();
        Self::new(n_users, n_contents, triplets)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_contents(&self) -> usize {
        self.n_contents
    }

    pub fn triplets(&self) -> &[Rating<T>] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn density(&self) -> f64 {
        self.triplets.len() as f64 / (self.n_users * self.n_contents) as f64
    }

    pub fn get(&self, user: usize, content: usize) -> Option<T> {
        self.triplets
            .binary_search_by_key(&(user, content), |t| (t.user, t.content))
            .ok()
            .map(|i| self.triplets[i].value)
    }

    /// Dense view with unobserved cells set to zero.
    pub fn to_dense(&self) -> Array2<T> {
        let mut dense = Array2::zeros((self.n_users, self.n_contents));
        for t in &self.triplets {
            dense[(t.user, t.content)] = t.value;
        }
        dense
    }

    /// Multiplies every rating by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            n_users: self.n_users,
            n_contents: self.n_contents,
            triplets: self
                .triplets
                .iter()
                .map(|t| Rating { value: t.value * factor, ..*t })
                .collect(),
        }
    }

    /// Ratings whose cell is not in `other`.
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            n_users: self.n_users,
            n_contents: self.n_contents,
            triplets: self
                .triplets
                .iter()
                .filter(|t| other.get(t.user, t.content).is_none())
                .copied()
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(user: usize, content: usize, value: f64) -> Rating<f64> {
        Rating { user, content, value }
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(RatingsMatrix::new(2, 2, vec![r(0, 0, 1.0), r(0, 0, 2.0)]).is_err());
        assert!(RatingsMatrix::new(2, 2, vec![r(2, 0, 1.0)]).is_err());
        assert!(RatingsMatrix::new(2, 2, vec![r(0, 1, 0.0)]).is_err());
    }

    #[test]
    fn density_and_lookup() {
        let m = RatingsMatrix::new(2, 4, vec![r(1, 3, 0.5), r(0, 0, 1.0)]).unwrap();
        assert_eq!(m.density(), 0.25);
        assert_eq!(m.get(1, 3), Some(0.5));
        assert_eq!(m.get(1, 2), None);
        assert_eq!(m.triplets()[0], r(0, 0, 1.0));
    }
}
