//! Fairness post-processing for soft classifiers.
//!
//! Given any classifier that outputs label distributions, this crate finds
//! the group-dependent stochastic relabeling that maximizes accuracy while
//! keeping the two groups' expected "happiness" within a chosen tolerance
//! of each other.  Happiness is a user-defined vector-valued function of
//! the prediction, the features, the true label, and the group, which is
//! enough to express statistical parity, overall accuracy, equalized odds,
//! and domain-specific utilities such as expected funding.
//!
//! The pipeline: estimate empirical moments from a labeled dataset with
//! predictions attached ([`estimators`]), build the fairness or the
//! minimal-gap linear program ([`lp`]), solve it with the embedded simplex
//! ([`simplex`]), and apply or sweep the resulting post-processor
//! ([`postprocess`]).  The [`baseline`] forest and [`data`] generators
//! exist so the whole loop runs end-to-end without external dependencies.

pub mod baseline;
pub mod criteria;
pub mod data;
pub mod dataset;
pub mod estimators;
pub mod expr;
pub mod happiness;
pub mod lp;
pub mod postprocess;
pub mod rng;
pub mod simplex;

pub use dataset::{Dataset, FeatureKind, FeatureSchema, FeatureValue, LabelSpace, Sample};
pub use estimators::{estimate_moments, sample_size_bound, EmpiricalMoments};
pub use happiness::HappinessSpec;
pub use lp::{
    build_fair_lp, build_gap_lp, extract_postprocessor, solve_lp, solve_lp_canonical,
    PostProcessor,
};
pub use postprocess::{apply, expected_loss, happiness_gap, sweep};
