//! Mean residual life `m(x) = E[X - x | X > x]` and the generalized MRL
//! `e(x) = m(x) / x`.
//!
//! On `[0, 2/3]` the MRL is the ratio of the tail integral `∫ₓ¹ (1 - F)` to
//! `1 - F(x) >= p/(p+1)`, both evaluated by recursions free of cancellation
//! so that small `p` keeps full relative precision. Past `2/3`
//! both quantities vanish at `x = 1`, so the ratio is rewritten with
//! `s = 3(1 - x)` as `m(x) = J(s) / (3 F(s))`, and since
//! `J(s)/F(s) = J(3s) / (3 F(3s))` for `s < 1/3` the leading left steps are
//! peeled off exactly. What remains is a ratio of two quantities bounded away
//! from zero, so absolute tolerances translate into a relative one.
//!
//! Tolerances are tightened after a first pass so the propagated error of the
//! quotient meets the requested bound; if the depth budget prevents that, the
//! achieved bound is reported instead.

use serde::{Deserialize, Serialize};

use crate::distribution::{walk_cdf, EvalConfig, PSingularParams};
use crate::error::{check_unit_interval, Error, Result};
use crate::integration::{walk_integral, walk_tail, IntegralValue};
use crate::ternary::{Branch, TernaryPoint};

/// An MRL evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrlValue {
    pub value: f64,
    pub x: f64,
    pub p: f64,
    pub error_bound: f64,
}

/// `m_p(1/3) = (5p+4) / (6(2p+1))`.
pub fn mrl_at_one_third(params: &PSingularParams) -> f64 {
    let p = params.p();
    (5.0 * p + 4.0) / (6.0 * (2.0 * p + 1.0))
}

/// Numerator and denominator of a quotient with their error bounds.
#[derive(Debug, Clone, Copy)]
struct Quotient {
    scale: f64,
    num: f64,
    num_err: f64,
    den: f64,
    den_err: f64,
}

impl Quotient {
    fn value(&self) -> f64 {
        self.scale * self.num / self.den
    }

    fn error_bound(&self) -> f64 {
        if self.den - self.den_err <= 0.0 {
            return f64::INFINITY;
        }
        let q = self.value();
        let hi = self.scale * (self.num + self.num_err) / (self.den - self.den_err);
        let lo = self.scale * (self.num - self.num_err).max(0.0) / (self.den + self.den_err);
        (hi - q).max(q - lo)
    }

    /// Component tolerance that keeps the quotient error near `target / 2`.
    fn tightened(&self, target: f64) -> f64 {
        let ratio = (self.num / self.den).abs();
        0.5 * target * self.den / (self.scale * (1.0 + ratio))
    }
}

fn cfg_with(config: &EvalConfig, tolerance: f64) -> EvalConfig {
    EvalConfig {
        tolerance,
        max_depth: config.max_depth,
    }
}

/// Where the evaluation of `m(x)` is carried out.
enum Route {
    /// `x <= 2/3`: tail integral over survival at `x` itself.
    Direct(TernaryPoint),
    /// `x > 2/3`: `scale * J(s) / F(s)` at the reduced point `s in [1/3, 1]`.
    Reduced { point: TernaryPoint, scale: f64 },
}

fn route(x: f64) -> Route {
    let start = TernaryPoint::new(x);
    let mut probe = start.clone();
    if probe.step() != Branch::Right {
        return Route::Direct(start);
    }
    let mut point = probe;
    let mut scale = 1.0 / 3.0;
    loop {
        let mut next = point.clone();
        if next.step() != Branch::Left {
            break;
        }
        point = next;
        scale /= 3.0;
    }
    Route::Reduced { point, scale }
}

fn quotient(params: &PSingularParams, route: &Route, config: &EvalConfig) -> Quotient {
    match route {
        Route::Direct(point) => {
            let w = walk_cdf(params, point.clone(), config.depth_for(params.contraction()));
            let t = walk_tail(params, point.clone(), config);
            Quotient {
                scale: 1.0,
                num: t.value,
                num_err: t.error_bound,
                den: w.survival,
                den_err: w.error_bound,
            }
        }
        Route::Reduced { point, scale } => {
            let w = walk_cdf(params, point.clone(), config.depth_for(params.contraction()));
            let j = walk_integral(params, point.clone(), config);
            Quotient {
                scale: *scale,
                num: j.value,
                num_err: j.error_bound,
                den: w.cdf,
                den_err: w.error_bound,
            }
        }
    }
}

pub(crate) fn mrl_unchecked(params: &PSingularParams, x: f64, config: &EvalConfig) -> MrlValue {
    if x == 1.0 {
        return MrlValue {
            value: 0.0,
            x,
            p: params.p(),
            error_bound: 0.0,
        };
    }
    let route = route(x);
    let mut q = quotient(params, &route, config);
    if q.error_bound() > config.tolerance {
        let tighter = q.tightened(config.tolerance).min(config.tolerance);
        if tighter > 0.0 && tighter.is_finite() {
            q = quotient(params, &route, &cfg_with(config, tighter));
        }
    }
    MrlValue {
        value: q.value().clamp(0.0, 1.0 - x),
        x,
        p: params.p(),
        error_bound: q.error_bound(),
    }
}

/// Mean residual life `m_p(x)`; zero at `x = 1`.
pub fn mrl(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<MrlValue> {
    check_unit_interval(x, "x")?;
    Ok(mrl_unchecked(params, x, config))
}

/// Generalized MRL `e_p(x) = m_p(x) / x` for `0 < x <= 1`.
pub fn gmrl(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<MrlValue> {
    check_unit_interval(x, "x")?;
    if x == 0.0 {
        return Err(Error::Domain("the generalized MRL diverges at x = 0".into()));
    }
    let m = mrl_unchecked(params, x, config);
    Ok(MrlValue {
        value: m.value / x,
        error_bound: m.error_bound / x,
        ..m
    })
}

/// `∫ₓ¹ (1 - F_p(u)) du = E[(X - x)₊]`.
pub fn tail_integral(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<IntegralValue> {
    check_unit_interval(x, "x")?;
    if x == 1.0 {
        return Ok(IntegralValue {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let t = walk_tail(params, TernaryPoint::new(x), config);
    Ok(IntegralValue {
        value: t.value.clamp(0.0, 1.0 - x),
        error_bound: t.error_bound,
    })
}
