//! Distributions, empirical CDFs, the probability-integral normalizations and
//! the one-sample Kolmogorov-Smirnov test against U(0,1).

mod dist;
mod ecdf;
mod ks;

pub use dist::{Dist, DistributionSpec};
pub use ecdf::{beta_min_cdf, ecdf_eval, pit_empirical, pit_known_cdf, SampleHistory};
pub use ks::{kolmogorov_sf, ks_pvalue, ks_statistic, ks_test_uniform, KsResult};

/// CDF of U(0,1).
pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
