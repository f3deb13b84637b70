use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Injective partial maps from source indices to target indices.
///
/// Entry `s` of a map is the target index of source entity `s`; source
/// indices past the end of a map are unmapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMap {
    content_map: Vec<Option<usize>>,
    user_map: Vec<Option<usize>>,
}

impl CorrespondenceMap {
    pub fn new(content_map: Vec<Option<usize>>, user_map: Vec<Option<usize>>) -> Result<Self> {
        for (name, map) in [("content", &content_map), ("user", &user_map)] {
            let mut seen = HashSet::new();
            if let Some(t) = map.iter().flatten().find(|&&t| !seen.insert(t)) {
                return Err(Error::invalid(format!("{name} correspondence maps twice onto {t}")));
            }
        }
        Ok(Self { content_map, user_map })
    }

    pub fn identity(n_contents: usize, n_users: usize) -> Self {
        Self {
            content_map: (0..n_contents).map(Some).collect(),
            user_map: (0..n_users).map(Some).collect(),
        }
    }

    /// No source entity corresponds to any target entity.
    pub fn disjoint() -> Self {
        Self { content_map: Vec::new(), user_map: Vec::new() }
    }

    pub fn content_map(&self) -> &[Option<usize>] {
        &self.content_map
    }

    pub fn user_map(&self) -> &[Option<usize>] {
        &self.user_map
    }

    pub fn fixed_contents(&self) -> usize {
        count_fixed(&self.content_map)
    }

    pub fn fixed_users(&self) -> usize {
        count_fixed(&self.user_map)
    }

    pub(crate) fn check_against(&self, target_users: usize, target_contents: usize) -> Result<()> {
        if let Some(t) = self.user_map.iter().flatten().find(|&&t| t >= target_users) {
            return Err(Error::invalid(format!("user correspondence targets {t}, beyond {target_users} users")));
        }
        if let Some(t) = self.content_map.iter().flatten().find(|&&t| t >= target_contents) {
            return Err(Error::invalid(format!(
                "content correspondence targets {t}, beyond {target_contents} contents"
            )));
        }
        Ok(())
    }
}

fn count_fixed(map: &[Option<usize>]) -> usize {
    map.iter().enumerate().filter(|(s, t)| **t == Some(*s)).count()
}

/// Correspondence in which `round(ratio · n)` indices map to themselves and
/// the rest are deranged uniformly at random among themselves.
///
/// A remainder of exactly one index cannot be deranged and stays fixed.
pub fn make_correspondence<R: Rng + ?Sized>(
    ratio: f64,
    n_contents: usize,
    n_users: usize,
    rng: &mut R,
) -> Result<CorrespondenceMap> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid(format!("correspondence ratio must lie in [0, 1], got {ratio}")));
    }
    let content_map = partial_derangement(ratio, n_contents, rng);
    let user_map = partial_derangement(ratio, n_users, rng);
    CorrespondenceMap::new(content_map, user_map)
}

fn partial_derangement<R: Rng + ?Sized>(ratio: f64, n: usize, rng: &mut R) -> Vec<Option<usize>> {
    let fixed = (ratio * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let moved = &order[fixed..];
    let mut map: Vec<Option<usize>> = (0..n).map(Some).collect();
    if moved.len() >= 2 {
        let mut images = moved.to_vec();
        // Rejection sampling yields a uniform derangement; ~e tries on average.
        loop {
            images.shuffle(rng);
            if moved.iter().zip(&images).all(|(a, b)| a != b) {
                break;
            }
        }
        for (&s, &t) in moved.iter().zip(&images) {
            map[s] = Some(t);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn ratio_one_is_identity() {
        let c = make_correspondence(1.0, 32, 32, &mut rng_from_seed(1)).unwrap();
        assert_eq!(c, CorrespondenceMap::identity(32, 32));
    }

    #[test]
    fn ratio_zero_has_no_fixed_points() {
        for seed in 0..50 {
            let c = make_correspondence(0.0, 32, 32, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(c.fixed_contents(), 0);
            assert_eq!(c.fixed_users(), 0);
        }
    }

    #[test]
    fn half_ratio_fixes_sixteen() {
        for seed in 0..50 {
            let c = make_correspondence(0.5, 32, 32, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(c.fixed_contents(), 16);
            assert_eq!(c.fixed_users(), 16);
        }
    }

    #[test]
    fn rejects_non_injective_maps() {
        assert!(CorrespondenceMap::new(vec![Some(1), Some(1)], vec![]).is_err());
        assert!(make_correspondence(1.5, 4, 4, &mut rng_from_seed(0)).is_err());
    }
}
