//! Numerical toolkit for monotone functions, integral divergence
//! conditions, mean-value inequalities on the unit ball and radial stretch
//! maps with prescribed outer dilatation.

pub mod classifier;
pub mod dyadic;
pub mod error;
pub mod extremal;
pub mod formats;
pub mod mean_inequality;
pub mod modulus;
pub mod monotone;
pub mod quadrature;
pub mod sampling;
pub mod suite;

pub use classifier::{
    analytic_oracle, classify, classify_all_equivalent, Classifier, ConditionKind, ConditionReport,
    ConditionTag, EquivalenceReport,
};
pub use dyadic::{BlockRule, Verdict};
pub use error::{QlabError, Result};
pub use extremal::{normalize_phi, DistortionProfile, ExtremalMap};
pub use formats::{FieldSpec, FunctionSpec};
pub use mean_inequality::{ball_mean, spherical_average, verify_lemma31, RadialField, VerificationRecord};
pub use modulus::{dimension_constants, norm_divergence, ring_modulus, spherical_norm, DimensionConstants};
pub use monotone::{Interpolation, LogMap, MonotoneMap, Table};
