use ndarray::Array2;

use super::model::{dot, FactorModel};
use crate::error::{Error, Result};
use crate::ratings::Rating;
use crate::scalar::Scalar;

/// Per-system weights `α_s` and the Frobenius regularization `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlWeights<T> {
    pub alpha_source: T,
    pub alpha_target: T,
    pub mu: T,
}

impl<T: Scalar> TlWeights<T> {
    pub fn new(alpha_source: T, alpha_target: T, mu: T) -> Result<Self> {
        let w = Self { alpha_source, alpha_target, mu };
        w.validate()?;
        Ok(w)
    }

    /// Weights of a target-only factorization.
    pub fn target_only(mu: T) -> Self {
        Self { alpha_source: T::zero(), alpha_target: T::one(), mu }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v >= T::zero() && v.is_finite();
        if !ok(self.alpha_source) || !ok(self.alpha_target) || !ok(self.mu) {
            return Err(Error::invalid("system weights and mu must be finite and non-negative"));
        }
        if self.alpha_source == T::zero() && self.alpha_target == T::zero() {
            return Err(Error::invalid("at least one system weight must be positive"));
        }
        Ok(())
    }
}

/// Observations of both systems, already mapped into the model's index space.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet<T> {
    pub target: Vec<Rating<T>>,
    pub source: Vec<Rating<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub users: Array2<T>,
    pub contents: Array2<T>,
}

impl<T: Scalar> Gradient<T> {
    pub(crate) fn zeros_like(model: &FactorModel<T>) -> Self {
        Self {
            users: Array2::zeros(model.user_factors.raw_dim()),
            contents: Array2::zeros(model.content_factors.raw_dim()),
        }
    }

    pub fn max_abs(&self) -> T {
        self.users
            .iter()
            .chain(self.contents.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Objective `Σ_s α_s Σ (n_iᵀ f_j − r)² + μ (‖N‖² + ‖F‖²)` and its gradient
/// with respect to every factor entry.
pub fn objective_and_gradient<T: Scalar>(
    model: &FactorModel<T>,
    batch: &TrainingSet<T>,
    weights: &TlWeights<T>,
) -> (T, Gradient<T>) {
    let mut grad = Gradient::zeros_like(model);
    let value = accumulate(model, batch, weights, &mut grad);
    (value, grad)
}

/// Overwrites `grad` with the gradient and returns the objective.
///
/// Systems with zero weight are skipped entirely, so a joint model with
/// `alpha_source = 0` performs exactly the arithmetic of a target-only fit on
/// its target rows.
pub(crate) fn accumulate<T: Scalar>(
    model: &FactorModel<T>,
    batch: &TrainingSet<T>,
    weights: &TlWeights<T>,
    grad: &mut Gradient<T>,
) -> T {
    let two = T::of(2.0);
    let two_mu = two * weights.mu;
    ndarray::Zip::from(&mut grad.users)
        .and(&model.user_factors)
        .for_each(|g, &v| *g = two_mu * v);
    ndarray::Zip::from(&mut grad.contents)
        .and(&model.content_factors)
        .for_each(|g, &v| *g = two_mu * v);
    let frobenius: T = model
        .user_factors
        .iter()
        .chain(model.content_factors.iter())
        .map(|&v| v * v)
        .sum();
    let mut value = weights.mu * frobenius;

    for (alpha, ratings) in [(weights.alpha_target, &batch.target), (weights.alpha_source, &batch.source)] {
        if alpha == T::zero() {
            continue;
        }
        let mut system = T::zero();
        for r in ratings {
            let n = model.user_factors.row(r.user);
            let f = model.content_factors.row(r.content);
            let (n, f) = (n.as_slice().unwrap(), f.as_slice().unwrap());
            let residual = dot(n, f) - r.value;
            system = system + residual * residual;
            let coef = two * alpha * residual;
            let mut gn = grad.users.row_mut(r.user);
            for (g, &fv) in gn.iter_mut().zip(f) {
                *g = *g + coef * fv;
            }
            let mut gf = grad.contents.row_mut(r.content);
            for (g, &nv) in gf.iter_mut().zip(n) {
                *g = *g + coef * nv;
            }
        }
        value = value + alpha * system;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_residual_is_stationary() {
        let model = FactorModel::new(array![[1.0f64, 2.0]], array![[0.5, 0.25]]).unwrap();
        let batch = TrainingSet {
            target: vec![Rating { user: 0, content: 0, value: 1.0 }],
            source: vec![],
        };
        let (value, grad) = objective_and_gradient(&model, &batch, &TlWeights::target_only(0.0));
        assert_eq!(value, 0.0);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn zero_factors_leave_only_squared_ratings() {
        let model = FactorModel::new(Array2::<f64>::zeros((3, 2)), Array2::zeros((3, 2))).unwrap();
        let batch = TrainingSet {
            target: vec![Rating { user: 0, content: 1, value: 0.5 }],
            source: vec![Rating { user: 2, content: 2, value: 2.0 }],
        };
        let w = TlWeights::new(0.5, 1.0, 0.3).unwrap();
        let (value, grad) = objective_and_gradient(&model, &batch, &w);
        assert_eq!(value, 1.0 * 0.25 + 0.5 * 4.0);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(TlWeights::new(0.0f64, 0.0, 0.1).is_err());
        assert!(TlWeights::new(-1.0f64, 1.0, 0.1).is_err());
        assert!(TlWeights::new(1.0f64, 0.0, 0.0).is_ok());
    }
}
