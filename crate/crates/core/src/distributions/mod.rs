//! Densities, samplers and covariance algebra for the skew-t factor model.

mod gh;
mod gig;
mod sampler;
mod skew_t;
mod woodbury;

pub use gh::{gh_log_density, GhParams};
pub use gig::{expectations_from_bessel, gig_expectations, gig_log_density, GigExpectations, GigParams};
pub use sampler::{sample_skew_t, seeded_rng, SkewTFactorSampler};
pub use skew_t::{conditional_gig_given_x, skew_t_log_density, SkewT, SkewTParams, MIN_SKEWNESS_NORM};
pub use woodbury::{woodbury_inverse, LowRankCov};
