//! Proactive content caching at storage-limited small-cell base stations.
//!
//! The crate is organised around the pipeline of one Monte Carlo realization:
//!
//! * [`demand`] builds the ground-truth popularity, the request trace and the
//!   sparse training ratings of the target domain.
//! * [`source`] seats a Chinese restaurant process to produce the D2D source
//!   domain ratings.
//! * [`factorization`] estimates popularity by regularized low-rank matrix
//!   factorization, either on the target alone or jointly with the source.
//! * [`placement`] turns popularity scores into storage-feasible cache plans.
//! * [`delivery`] replays the trace slot by slot and reports the satisfaction
//!   ratio and backhaul load.
//! * [`harness`] wires everything into realizations, sweeps, CSV and SVG output.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the precision used by the harness.

// Negated float comparisons are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delivery;
pub mod demand;
pub mod error;
pub mod factorization;
pub mod harness;
pub mod oracle;
pub mod placement;
pub mod ratings;
pub mod scalar;
pub mod seed;
pub mod source;

pub use delivery::{offloading_gain, simulate, DeliveryReport, LinkBudget, Metrics, RequestRecord};
pub use demand::{
    make_popularity, sample_trace, sparsify, zipf_pmf, Association, Catalog, PopularityMatrix,
    Request, RequestTrace, ZipfLaw,
};
pub use error::{Error, Result};
pub use placement::{place_greedy, place_random, station_scores, CachePlan, ScoreScope};
pub use factorization::{
    cf_fit, make_correspondence, objective_and_gradient, predict_matrix, tl_fit,
    CorrespondenceMap, FactorModel, FitSettings, Gradient, TlWeights, TrainingSet,
};

pub use ratings::{Rating, RatingsMatrix};
pub use scalar::Scalar;
pub use source::{crp_log_prob, crp_sample, crp_to_ratings, CrpConfig, SeatingOutcome};

pub type ZipfLaw64 = ZipfLaw<f64>;
pub type PopularityMatrix64 = PopularityMatrix<f64>;
pub type RatingsMatrix64 = RatingsMatrix<f64>;
pub type FactorModel64 = FactorModel<f64>;
pub type FactorModel32 = FactorModel<f32>;
pub type TlWeights64 = TlWeights<f64>;
pub type FitSettings64 = FitSettings<f64>;
pub type Catalog64 = Catalog<f64>;
pub type LinkBudget64 = LinkBudget<f64>;
pub type CachePlan64 = CachePlan<f64>;
pub type Metrics64 = Metrics<f64>;
pub type DeliveryReport64 = DeliveryReport<f64>;
