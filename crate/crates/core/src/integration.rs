//! The integrated CDF `J(x) = ∫₀ˣ F_p(u) du` and its closed-form anchors.
//!
//! `J` inherits a self-similar recursion from the CDF. With
//! `I₁ = J(1/3) = (p+2) / (6 (p+1)(2p+1))`:
//!
//! ```text
//! x <= 1/3         J(x) = J(3x) / (3(p+1))
//! 1/3 <= x <= 2/3  J(x) = I₁ + (x - 1/3)/(p+1)
//! x >= 2/3         J(x) = I₁ + 1/(3(p+1)) + (x - 2/3) - p I₁ + p J(1-x)
//! ```
//!
//! and `J(1-x) = J(3(1-x)) / (3(p+1))` closes the right branch. The per-level
//! weight is at most `max(1,p) / (3(p+1)) <= 1/3`.

use serde::{Deserialize, Serialize};

use crate::distribution::{depth_for, EvalConfig, PSingularParams};
use crate::error::{check_unit_interval, Result};
use crate::ternary::{Branch, TernaryPoint};

/// `∫₀ˣ F_p` with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub error_bound: f64,
}

/// `I₁ = ∫₀^{1/3} F_p = (p+2) / (6 (p+1)(2p+1))`.
pub fn i1_closed_form(params: &PSingularParams) -> f64 {
    let p = params.p();
    (p + 2.0) / (6.0 * (p + 1.0) * (2.0 * p + 1.0))
}

/// `E[X_p] = 3p / (2(2p+1))`.
pub fn mean(params: &PSingularParams) -> f64 {
    let p = params.p();
    3.0 * p / (2.0 * (2.0 * p + 1.0))
}

/// `J(1) = 1 - E[X_p] = 3(p+1) I₁`.
pub fn total_integral(params: &PSingularParams) -> f64 {
    let p = params.p();
    (p + 2.0) / (2.0 * (2.0 * p + 1.0))
}

/// Difference `(1 - J(1)) - E[X_p]` computed through the recursion; zero up
/// to the evaluation tolerance.
pub fn mean_identity_residual(params: &PSingularParams, config: &EvalConfig) -> f64 {
    let j1 = walk_integral(params, TernaryPoint::new(1.0), config);
    (1.0 - j1.value) - mean(params)
}

pub(crate) fn integral_contraction(params: &PSingularParams) -> f64 {
    params.contraction() / 3.0
}

pub(crate) fn walk_integral(params: &PSingularParams, mut point: TernaryPoint, config: &EvalConfig) -> IntegralValue {
    let p = params.p();
    let i1 = i1_closed_form(params);
    let left = params.left_mass();
    let left_weight = 1.0 / (3.0 * (p + 1.0));
    let right_weight = p / (3.0 * (p + 1.0));
    let right_const = i1 * (1.0 - p) + left_weight;
    let depth = depth_for(config.tolerance, integral_contraction(params), config.max_depth);

    // J(x0) = acc + weight * J(state)
    let mut acc = 0.0;
    let mut weight = 1.0;
    for _ in 0..depth {
        match point.step() {
            Branch::Zero => {
                return IntegralValue {
                    value: acc,
                    error_bound: 0.0,
                }
            }
            Branch::Middle => {
                let value = acc + weight * (i1 + point.middle_offset() * left);
                return IntegralValue {
                    value,
                    error_bound: 0.0,
                };
            }
            Branch::Left => weight *= left_weight,
            Branch::Right => {
                // The state is now s' = 3(1 - s), so s - 2/3 = (1 - s')/3.
                let next = point.to_f64();
                acc += weight * (right_const + (1.0 - next) / 3.0);
                weight *= right_weight;
            }
        }
    }
    // 0 <= J(s) <= s
    let half = 0.5 * weight * point.to_f64();
    IntegralValue {
        value: acc + half,
        error_bound: half,
    }
}

/// `T(x) = ∫ₓ¹ (1 - F_p)` through its own recursion, whose terms are all
/// nonnegative multiples of `p`. Writing `R = p/(p+1)`:
///
/// ```text
/// x <= 1/3         T(x) = R (1/3 - x) + T(1/3) + T(3x) / (3(p+1))
/// 1/3 <= x <= 2/3  T(x) = R (2/3 - x) + T(2/3)
/// x >= 2/3         T(x) = (R/3) J(3(1 - x))
/// ```
///
/// with `T(2/3) = (R/3) J(1)` and `T(1/3) = (R/3)(1 + J(1))`. Subtracting
/// from `J(1)` instead would lose all relative precision for small `p`.
pub(crate) fn walk_tail(params: &PSingularParams, mut point: TernaryPoint, config: &EvalConfig) -> IntegralValue {
    let p = params.p();
    let r = params.right_mass();
    let t23 = r / 3.0 * total_integral(params);
    let t13 = r / 3.0 + t23;
    let left_weight = 1.0 / (3.0 * (p + 1.0));
    let depth = depth_for(config.tolerance, integral_contraction(params), config.max_depth);

    let mut acc = 0.0;
    let mut weight = 1.0;
    for _ in 0..depth {
        match point.step() {
            Branch::Zero => {
                return IntegralValue {
                    value: acc + weight * mean(params),
                    error_bound: 0.0,
                }
            }
            Branch::Middle => {
                let value = acc + weight * (r * (1.0 / 3.0 - point.middle_offset()) + t23);
                return IntegralValue {
                    value,
                    error_bound: 0.0,
                };
            }
            Branch::Left => {
                // The state is now 3x, so 1/3 - x = (1 - 3x)/3.
                acc += weight * (r * (1.0 - point.to_f64()) / 3.0 + t13);
                weight *= left_weight;
            }
            Branch::Right => {
                let w = weight * r / 3.0;
                let j = walk_integral(params, point, config);
                return IntegralValue {
                    value: acc + w * j.value,
                    error_bound: w * j.error_bound,
                };
            }
        }
    }
    // 0 <= T(s) <= 1 - s
    let half = 0.5 * weight * (1.0 - point.to_f64());
    IntegralValue {
        value: acc + half,
        error_bound: half,
    }
}

/// `J(x) = ∫₀ˣ F_p(u) du` to within `config.tolerance`.
pub fn cdf_integral(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<IntegralValue> {
    check_unit_interval(x, "x")?;
    if x == 0.0 {
        return Ok(IntegralValue {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let j = walk_integral(params, TernaryPoint::new(x), config);
    Ok(IntegralValue {
        value: j.value.clamp(0.0, x),
        error_bound: j.error_bound,
    })
}
