//! The MRL fixed point `m_p(x) = x`.
//!
//! On the plateau `[1/3, 2/3]` the CDF is constant, so `m` decreases there
//! with slope exactly -1 and `g(x) = m(x) - x` with slope -2. The root is
//! bracketed by the plateau ends and found by bisection; outside the plateau
//! a grid scan (augmented with Cantor gap endpoints) checks that `g` keeps a
//! single sign change on the whole of `[0, 1]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{gaps_up_to, EvalConfig, PSingularParams, PLATEAU_END, PLATEAU_START};
use crate::error::{Error, Result};
use crate::mrl::mrl_unchecked;

/// Grid size used when [`fixed_point_solve`] runs its uniqueness scan.
pub const DEFAULT_GRID: usize = 1000;
/// Deepest Cantor construction stage whose gap endpoints join the scan grid.
pub const GAP_LEVELS: u32 = 8;

const MAX_BISECTIONS: usize = 200;
const ROOT_EXCLUSION_RADIUS: f64 = 1e-3;
const RIGHT_EDGE_EPS: f64 = 1e-9;

/// `x*_p = 1/6 + (5p+4) / (12(2p+1))`.
pub fn fixed_point_closed_form(params: &PSingularParams) -> f64 {
    let p = params.p();
    1.0 / 6.0 + (5.0 * p + 4.0) / (12.0 * (2.0 * p + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub p: f64,
    pub x_star: f64,
    /// `m(x_star) - x_star`.
    pub residual: f64,
    pub bracket: (f64, f64),
    pub closed_form: f64,
    pub sign_changes: usize,
    pub bisections: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub bisections: usize,
}

fn residual(params: &PSingularParams, x: f64, config: &EvalConfig) -> f64 {
    mrl_unchecked(params, x, config).value - x
}

/// Bisection of `m(x) - x` on the plateau.
pub(crate) fn bisect(params: &PSingularParams, config: &EvalConfig) -> Result<Root> {
    let (mut lo, mut hi) = (PLATEAU_START, PLATEAU_END);
    let g_lo = residual(params, lo, config);
    let g_hi = residual(params, hi, config);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Convergence(format!(
            "m(x) - x does not change sign on the plateau: g({lo}) = {g_lo}, g({hi}) = {g_hi}"
        )));
    }
    for n in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let g = residual(params, mid, config);
        if g.abs() <= config.tolerance || mid <= lo || mid >= hi {
            return Ok(Root {
                x: mid,
                residual: g,
                bracket: (lo, hi),
                bisections: n,
            });
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(format!(
        "no root within {MAX_BISECTIONS} bisections"
    )))
}

/// Solves `m_p(x) = x` and runs a [`DEFAULT_GRID`]-point uniqueness scan.
pub fn fixed_point_solve(params: &PSingularParams, config: &EvalConfig) -> Result<FixedPointResult> {
    let root = bisect(params, config)?;
    let scan = scan(params, DEFAULT_GRID, config, root.x);
    Ok(FixedPointResult {
        p: params.p(),
        x_star: root.x,
        residual: root.residual,
        bracket: root.bracket,
        closed_form: fixed_point_closed_form(params),
        sign_changes: scan.sign_changes,
        bisections: root.bisections,
    })
}

/// Outcome of a sign scan of `m(x) - x` over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub p: f64,
    pub sign_changes: usize,
    pub points_evaluated: usize,
    /// Points whose sign could not be decided, away from the root.
    pub indeterminate: Vec<f64>,
    /// Points within the exclusion radius of the root that were skipped.
    pub excluded_near_root: usize,
    /// `min (m(x) - x)` over scanned `x` in `[0, 1/3]`.
    pub min_margin_left: f64,
    /// `max (m(x) - x)` over scanned `x` in `[2/3 + eps, 1]`.
    pub max_margin_right: f64,
    pub root: f64,
}

impl UniquenessReport {
    pub fn positive_on_left(&self) -> bool {
        self.min_margin_left > 0.0
    }

    pub fn negative_on_right(&self) -> bool {
        self.max_margin_right < 0.0
    }

    /// All checks of the scan hold.
    pub fn is_unique(&self) -> bool {
        self.sign_changes == 1 && self.indeterminate.is_empty() && self.positive_on_left() && self.negative_on_right()
    }
}

/// Uniform grid of `grid_n` points on `[0, 1]` joined with the endpoints of
/// all gaps up to [`GAP_LEVELS`], sorted and deduplicated.
pub fn augmented_grid(grid_n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..grid_n).map(|i| i as f64 / (grid_n - 1) as f64).collect();
    for g in gaps_up_to(GAP_LEVELS) {
        let (a, b) = g.interior();
        xs.extend([g.start, a, b, g.end]);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn scan(params: &PSingularParams, grid_n: usize, config: &EvalConfig, root: f64) -> UniquenessReport {
    let xs = augmented_grid(grid_n);
    let evaluated: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let m = mrl_unchecked(params, x, config);
            (x, m.value - x, m.error_bound)
        })
        .collect();

    let mut signs = Vec::with_capacity(evaluated.len());
    let mut indeterminate = Vec::new();
    let mut excluded = 0;
    let mut min_left = f64::INFINITY;
    let mut max_right = f64::NEG_INFINITY;
    for &(x, g, bound) in &evaluated {
        if x <= PLATEAU_START {
            min_left = min_left.min(g);
        }
        if x >= 2.0 / 3.0 + RIGHT_EDGE_EPS {
            max_right = max_right.max(g);
        }
        let threshold = (2.0 * config.tolerance).max(bound);
        if g > threshold {
            signs.push(1i8);
        } else if g < -threshold {
            signs.push(-1);
        } else if (x - root).abs() <= ROOT_EXCLUSION_RADIUS {
            excluded += 1;
        } else {
            indeterminate.push(x);
        }
    }
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    UniquenessReport {
        p: params.p(),
        sign_changes,
        points_evaluated: evaluated.len(),
        indeterminate,
        excluded_near_root: excluded,
        min_margin_left: min_left,
        max_margin_right: max_right,
        root,
    }
}

/// Counts sign changes of `m(x) - x` on the augmented grid.
pub fn verify_uniqueness(params: &PSingularParams, grid_n: usize, config: &EvalConfig) -> Result<UniquenessReport> {
    if grid_n < 100 {
        return Err(Error::Parameter(format!("grid_n must be at least 100, got {grid_n}")));
    }
    let root = bisect(params, config)?;
    Ok(scan(params, grid_n, config, root.x))
}
