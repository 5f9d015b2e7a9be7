//! Numerics for the p-singular Cantor-type distribution family.
//!
//! The family is indexed by `p > 0` and characterised by the functional
//! equations `F(x/3) = F(x)/(p+1)` and `F(1-x) = 1 - p F(x)` on `[0, 2/3]`;
//! `p = 1` is the classical Cantor distribution. The crate evaluates the CDF,
//! the integrated CDF, the mean residual life (MRL) and generalized MRL to a
//! stated absolute tolerance, solves the MRL fixed-point equation, and prices
//! a monopoly good facing linear demand with Cantor-type uncertainty.
//!
//! Module map:
//!
//! - [`distribution`]: parameters, CDF/survival evaluation, sampling, Cantor gaps.
//! - [`cloud`]: the shrink-and-flip point cloud used for plotting.
//! - [`integration`]: `J(x) = ∫₀ˣ F`, the anchor `∫₀^{1/3} F` and the mean.
//! - [`mrl`]: mean residual life and generalized MRL.
//! - [`fixedpoint`]: the MRL fixed point and a global uniqueness scan.
//! - [`pricing`]: expected payoff, optimal price and comparative statics.
//! - [`output`]: number formatting and CSV/JSON writers.
//! - [`verification`]: the invariant suite shared by `verify` and the tests.
//! - [`cli`]: the `singular-mrl` command-line front end.

pub mod cli;
pub mod cloud;
pub mod distribution;
mod error;
pub mod fixedpoint;
pub mod integration;
pub mod mrl;
pub mod output;
pub mod pricing;
mod ternary;
pub mod verification;

pub use cloud::{point_cloud, CloudOptions, CloudStream, PointCloud};
pub use distribution::{cdf, survival, Bounded, EvalConfig, PSingularParams};
pub use error::{Error, Result};
pub use fixedpoint::{fixed_point_closed_form, fixed_point_solve, FixedPointResult};
pub use integration::{cdf_integral, i1_closed_form, mean, IntegralValue};
pub use mrl::{gmrl, mrl, mrl_at_one_third, MrlValue};
pub use pricing::{comparative_statics, expected_payoff, optimal_price, PricingResult};
