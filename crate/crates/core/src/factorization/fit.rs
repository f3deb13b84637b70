use ndarray::Array2;
use rand::Rng;

use super::correspondence::CorrespondenceMap;
use super::model::FactorModel;
use super::objective::{accumulate, Gradient, TlWeights, TrainingSet};
use crate::error::{Error, Result};
use crate::ratings::{Rating, RatingsMatrix};
use crate::scalar::Scalar;

/// Full-batch gradient descent schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings<T> {
    pub learning_rate: T,
    pub epochs: usize,
    /// Factors start i.i.d. uniform in `[-init_scale, init_scale]`.
    pub init_scale: T,
}

impl<T: Scalar> Default for FitSettings<T> {
    fn default() -> Self {
        Self { learning_rate: T::of(0.02), epochs: 500, init_scale: T::of(0.05) }
    }
}

impl<T: Scalar> FitSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.init_scale >= T::zero()) || !self.init_scale.is_finite() {
            return Err(Error::invalid("init scale must be non-negative"));
        }
        Ok(())
    }
}

/// An initialized joint model together with its training observations.
#[derive(Debug, Clone)]
pub struct JointProblem<T> {
    pub model: FactorModel<T>,
    pub batch: TrainingSet<T>,
    pub weights: TlWeights<T>,
}

impl<T: Scalar> JointProblem<T> {
    /// Target-only problem.
    pub fn single<R: Rng + ?Sized>(
        ratings: &RatingsMatrix<T>,
        k: usize,
        mu: T,
        settings: &FitSettings<T>,
        rng: &mut R,
    ) -> Result<Self> {
        check_ratings(ratings, "target")?;
        check_rank(k, ratings.n_users(), ratings.n_contents())?;
        settings.validate()?;
        let weights = TlWeights::target_only(mu);
        weights.validate()?;
        let model = init_model(ratings.n_users(), ratings.n_contents(), 0, 0, k, settings.init_scale, rng);
        let batch = TrainingSet { target: ratings.triplets().to_vec(), source: Vec::new() };
        Ok(Self { model, batch, weights })
    }

    /// Joint problem over the union of target and source entities.
    ///
    /// Mapped source users and contents reuse the target row they map to;
    /// unmapped ones get fresh rows after the target block, in index order.
    pub fn joint<R: Rng + ?Sized>(
        target: &RatingsMatrix<T>,
        source: &RatingsMatrix<T>,
        corr: &CorrespondenceMap,
        weights: TlWeights<T>,
        k: usize,
        settings: &FitSettings<T>,
        rng: &mut R,
    ) -> Result<Self> {
        check_ratings(target, "target")?;
        check_ratings(source, "source")?;
        weights.validate()?;
        settings.validate()?;
        corr.check_against(target.n_users(), target.n_contents())?;

        let user_rows = union_rows(corr.user_map(), source.n_users(), target.n_users());
        let content_rows = union_rows(corr.content_map(), source.n_contents(), target.n_contents());
        let n_users = target.n_users() + user_rows.1;
        let n_contents = target.n_contents() + content_rows.1;
        check_rank(k, n_users, n_contents)?;

        let model = init_model(
            target.n_users(),
            target.n_contents(),
            user_rows.1,
            content_rows.1,
            k,
            settings.init_scale,
            rng,
        );
        let source = source
            .triplets()
            .iter()
            .map(|r| Rating { user: user_rows.0[r.user], content: content_rows.0[r.content], value: r.value })
            .collect();
        let batch = TrainingSet { target: target.triplets().to_vec(), source };
        Ok(Self { model, batch, weights })
    }
}

/// Row of every source index in the union space, and the number of extra rows.
fn union_rows(map: &[Option<usize>], n_source: usize, n_target: usize) -> (Vec<usize>, usize) {
    let mut extra = 0;
    let rows = (0..n_source)
        .map(|s| match map.get(s).copied().flatten() {
            Some(t) => t,
            None => {
                extra += 1;
                n_target + extra - 1
            }
        })
        .collect();
    (rows, extra)
}

fn check_ratings<T: Scalar>(ratings: &RatingsMatrix<T>, which: &str) -> Result<()> {
    if ratings.is_empty() {
        return Err(Error::invalid(format!("{which} ratings are empty")));
    }
    if ratings.triplets().iter().any(|r| !r.value.is_finite()) {
        return Err(Error::invalid(format!("{which} ratings contain non-finite values")));
    }
    Ok(())
}

fn check_rank(k: usize, n_users: usize, n_contents: usize) -> Result<()> {
    if k == 0 || k > n_users.min(n_contents) {
        return Err(Error::invalid(format!(
            "rank {k} must lie in 1..={} for a {n_users}x{n_contents} problem",
            n_users.min(n_contents)
        )));
    }
    Ok(())
}

/// Draws target users, target contents, then extra users and extra contents,
/// so the target block is independent of how many extra rows exist.
fn init_model<T: Scalar, R: Rng + ?Sized>(
    target_users: usize,
    target_contents: usize,
    extra_users: usize,
    extra_contents: usize,
    k: usize,
    scale: T,
    rng: &mut R,
) -> FactorModel<T> {
    let mut draw = |rows: usize| -> Vec<T> {
        (0..rows * k)
            .map(|_| T::of(rng.gen::<f64>() * 2.0 - 1.0) * scale)
            .collect()
    };
    let mut users = draw(target_users);
    let mut contents = draw(target_contents);
    users.extend(draw(extra_users));
    contents.extend(draw(extra_contents));
    FactorModel {
        user_factors: Array2::from_shape_vec((target_users + extra_users, k), users).unwrap(),
        content_factors: Array2::from_shape_vec((target_contents + extra_contents, k), contents).unwrap(),
        target_users,
        target_contents,
    }
}

/// Runs `settings.epochs` full-batch gradient steps on `problem.model`.
///
/// `on_epoch` receives the objective before each step and once more after
/// the last one.
pub fn train<T: Scalar>(
    problem: &mut JointProblem<T>,
    settings: &FitSettings<T>,
    mut on_epoch: impl FnMut(usize, T),
) {
    let mut grad = Gradient::zeros_like(&problem.model);
    let lr = settings.learning_rate;
    for epoch in 0..settings.epochs {
        let value = accumulate(&problem.model, &problem.batch, &problem.weights, &mut grad);
        on_epoch(epoch, value);
        ndarray::Zip::from(&mut problem.model.user_factors)
            .and(&grad.users)
            .for_each(|v, &g| *v = *v - lr * g);
        ndarray::Zip::from(&mut problem.model.content_factors)
            .and(&grad.contents)
            .for_each(|v, &g| *v = *v - lr * g);
    }
    let value = accumulate(&problem.model, &problem.batch, &problem.weights, &mut grad);
    on_epoch(settings.epochs, value);
}

/// Single-domain collaborative filtering on the target ratings.
pub fn cf_fit<T: Scalar, R: Rng + ?Sized>(
    ratings: &RatingsMatrix<T>,
    k: usize,
    mu: T,
    settings: &FitSettings<T>,
    rng: &mut R,
) -> Result<FactorModel<T>> {
    let mut problem = JointProblem::single(ratings, k, mu, settings, rng)?;
    train(&mut problem, settings, |_, _| {});
    finish(problem.model)
}

/// Joint source + target factorization. The returned model keeps the extra
/// source rows; use [`FactorModel::target`] to drop them.
pub fn tl_fit<T: Scalar, R: Rng + ?Sized>(
    target: &RatingsMatrix<T>,
    source: &RatingsMatrix<T>,
    corr: &CorrespondenceMap,
    weights: TlWeights<T>,
    k: usize,
    settings: &FitSettings<T>,
    rng: &mut R,
) -> Result<FactorModel<T>> {
    let mut problem = JointProblem::joint(target, source, corr, weights, k, settings, rng)?;
    train(&mut problem, settings, |_, _| {});
    finish(problem.model)
}

fn finish<T: Scalar>(model: FactorModel<T>) -> Result<FactorModel<T>> {
    if model.user_factors.iter().chain(model.content_factors.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("factorization diverged; lower the learning rate"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::predict_matrix;
    use crate::seed::rng_from_seed;

    fn rank_one(n: usize, m: usize) -> RatingsMatrix<f64> {
        let u: Vec<f64> = (0..n).map(|i| 0.4 + 0.1 * i as f64).collect();
        let v: Vec<f64> = (0..m).map(|j| 1.0 - 0.15 * j as f64).collect();
        let dense = Array2::from_shape_fn((n, m), |(i, j)| u[i] * v[j]);
        RatingsMatrix::from_dense(&dense).unwrap()
    }

    fn rmse(model: &FactorModel<f64>, ratings: &RatingsMatrix<f64>) -> f64 {
        let s: f64 = ratings
            .triplets()
            .iter()
            .map(|r| (model.predict(r.user, r.content) - r.value).powi(2))
            .sum();
        (s / ratings.len() as f64).sqrt()
    }

    #[test]
    fn rank_one_matrix_is_recovered() {
        let ratings = rank_one(5, 6);
        let model = cf_fit(&ratings, 1, 0.0, &FitSettings::default(), &mut rng_from_seed(1)).unwrap();
        assert!(rmse(&model, &ratings) < 1e-3);
    }

    #[test]
    fn single_point_fit() {
        let ratings = RatingsMatrix::new(1, 1, vec![Rating { user: 0, content: 0, value: 0.5f64 }]).unwrap();
        let model = cf_fit(&ratings, 1, 0.0, &FitSettings::default(), &mut rng_from_seed(2)).unwrap();
        assert!((model.predict(0, 0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn full_rank_interpolation() {
        let dense = ndarray::array![[0.6f64, 0.1, 0.3], [0.2, 0.7, 0.05], [0.15, 0.25, 0.9]];
        let ratings = RatingsMatrix::from_dense(&dense).unwrap();
        let settings = FitSettings { epochs: 4000, ..FitSettings::default() };
        let model = cf_fit(&ratings, 3, 0.0, &settings, &mut rng_from_seed(3)).unwrap();
        let pred = predict_matrix(&model, 3, 3).unwrap();
        let err = (&pred - &dense).mapv(|e| e * e).mean().unwrap().sqrt();
        assert!(err < 1e-3, "rmse {err}");
    }

    #[test]
    fn argument_errors() {
        let ratings = rank_one(3, 4);
        let s = FitSettings::default();
        assert!(cf_fit(&ratings, 4, 0.1, &s, &mut rng_from_seed(0)).is_err());
        assert!(cf_fit(&ratings, 0, 0.1, &s, &mut rng_from_seed(0)).is_err());
        let nan = RatingsMatrix::new(2, 2, vec![Rating { user: 0, content: 0, value: f64::NAN }]).unwrap();
        assert!(cf_fit(&nan, 1, 0.1, &s, &mut rng_from_seed(0)).is_err());
        let empty = RatingsMatrix::<f64>::new(2, 2, vec![]).unwrap();
        assert!(cf_fit(&empty, 1, 0.1, &s, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn union_space_shares_mapped_rows() {
        let (rows, extra) = union_rows(&[Some(2), None, Some(0)], 4, 3);
        assert_eq!(rows, vec![2, 3, 0, 4]);
        assert_eq!(extra, 2);
    }

    #[test]
    fn objective_decreases() {
        let ratings = rank_one(6, 6);
        let s = FitSettings::default();
        let mut p = JointProblem::single(&ratings, 2, 0.1, &s, &mut rng_from_seed(9)).unwrap();
        let mut trace = Vec::new();
        train(&mut p, &s, |_, v| trace.push(v));
        assert_eq!(trace.len(), s.epochs + 1);
        assert!(trace.last().unwrap() < trace.first().unwrap());
    }

    #[test]
    fn f32_fit_runs() {
        let dense = Array2::from_shape_fn((4, 4), |(i, j)| 0.1f32 + 0.05 * (i * j) as f32);
        let ratings = RatingsMatrix::from_dense(&dense).unwrap();
        let model = cf_fit(&ratings, 1, 0.0f32, &FitSettings::default(), &mut rng_from_seed(4)).unwrap();
        assert!(model.predict(3, 3).is_finite());
    }
}
