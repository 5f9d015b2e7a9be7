//! Monopoly pricing against linear demand `q(x) = X - x` with `X ~ F_p`.
//!
//! The seller's expected payoff is `Π(x) = x E(X - x)₊ = x ∫ₓ¹ (1 - F)`.
//! Its first-order condition is `m(x) = x`, so the optimal price is the MRL
//! fixed point. Lower `p` moves the demand shocks of the MRL toward lower
//! demand levels and raises the optimal price.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{EvalConfig, PSingularParams};
use crate::error::{check_unit_interval, Error, Result};
use crate::fixedpoint::bisect;
use crate::mrl::tail_integral;
use crate::output::write_csv_pairs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingResult {
    pub p: f64,
    pub optimal_price: f64,
    pub expected_payoff: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub payoff_curve: Option<Vec<(f64, f64)>>,
}

impl PricingResult {
    /// Writes the payoff curve as `price,payoff` CSV; an empty body if none
    /// was attached.
    pub fn write_curve_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        let rows = self.payoff_curve.iter().flatten().copied();
        write_csv_pairs(out, ("price", "payoff"), rows)?;
        Ok(())
    }
}

/// `Π(x) = x ∫ₓ¹ (1 - F_p)` for a price in `[0, 1]`.
pub fn expected_payoff(params: &PSingularParams, price: f64, config: &EvalConfig) -> Result<f64> {
    check_unit_interval(price, "price")?;
    Ok(price * tail_integral(params, price, config)?.value)
}

/// Optimal price (the MRL fixed point) and the payoff there.
pub fn optimal_price(params: &PSingularParams, config: &EvalConfig) -> Result<PricingResult> {
    let root = bisect(params, config)?;
    Ok(PricingResult {
        p: params.p(),
        optimal_price: root.x,
        expected_payoff: expected_payoff(params, root.x, config)?,
        payoff_curve: None,
    })
}

/// [`optimal_price`] plus `Π` on `grid` evenly spaced prices in `[0, 1]`.
pub fn optimal_price_with_curve(params: &PSingularParams, config: &EvalConfig, grid: usize) -> Result<PricingResult> {
    if grid < 2 {
        return Err(Error::Parameter(format!(
            "payoff grid needs at least 2 prices, got {grid}"
        )));
    }
    let mut result = optimal_price(params, config)?;
    let curve = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / (grid - 1) as f64;
            expected_payoff(params, x, config).map(|v| (x, v))
        })
        .collect::<Result<Vec<_>>>()?;
    result.payoff_curve = Some(curve);
    Ok(result)
}

/// Optimal prices for each `p`, in the order given.
pub fn comparative_statics(p_values: &[f64], config: &EvalConfig) -> Result<Vec<PricingResult>> {
    if p_values.is_empty() {
        return Err(Error::Parameter("p_values must not be empty".into()));
    }
    let params = p_values
        .iter()
        .map(|&p| PSingularParams::new(p))
        .collect::<Result<Vec<_>>>()?;
    params.par_iter().map(|pp| optimal_price(pp, config)).collect()
}

/// Demand supported on `[0, scale]` instead of `[0, 1]`: with `Y = scale X`,
/// prices scale by `scale` and payoffs by `scale²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandScale {
    scale: f64,
}

impl DemandScale {
    pub fn new(scale: f64) -> Result<Self> {
        if scale.is_finite() && scale > 0.0 {
            Ok(Self { scale })
        } else {
            Err(Error::Parameter(format!("demand scale must be positive, got {scale}")))
        }
    }

    pub fn to_unit_price(&self, price: f64) -> f64 {
        price / self.scale
    }

    pub fn from_unit_price(&self, unit: f64) -> f64 {
        unit * self.scale
    }

    /// Payoff at a price in the scaled units.
    pub fn expected_payoff(&self, params: &PSingularParams, price: f64, config: &EvalConfig) -> Result<f64> {
        let unit = expected_payoff(params, self.to_unit_price(price), config)?;
        Ok(unit * self.scale * self.scale)
    }

    pub fn optimal_price(&self, params: &PSingularParams, config: &EvalConfig) -> Result<PricingResult> {
        let r = optimal_price(params, config)?;
        Ok(PricingResult {
            optimal_price: self.from_unit_price(r.optimal_price),
            expected_payoff: r.expected_payoff * self.scale * self.scale,
            ..r
        })
    }
}
