//! Popularity estimation by regularized low-rank matrix factorization.
//!
//! [`cf_fit`] factorizes the target ratings alone. [`tl_fit`] factorizes the
//! target and source ratings jointly in a union index space where every
//! corresponding user or content owns a single shared factor row.

mod correspondence;
mod fit;
mod model;
mod objective;

pub use correspondence::{make_correspondence, CorrespondenceMap};
pub use fit::{cf_fit, tl_fit, train, FitSettings, JointProblem};
pub use model::{predict_matrix, FactorModel};
pub use objective::{objective_and_gradient, Gradient, TlWeights, TrainingSet};
