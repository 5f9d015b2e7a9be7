//! The p-singular Cantor-type distribution: parameters, CDF and survival
//! evaluation, sampling, and the gap structure of the Cantor set.
//!
//! The CDF is evaluated by descending the ternary structure of `x`:
//!
//! ```text
//! x in [1/3, 2/3]  =>  F(x) = 1/(p+1)
//! x < 1/3          =>  F(x) = F(3x) / (p+1)
//! x > 2/3          =>  F(x) = 1 - p F(3(1-x)) / (p+1)
//! ```
//!
//! Each level multiplies the remaining uncertainty by `1/(p+1)` or
//! `p/(p+1)`, so stopping after `k` levels and returning the midpoint of the
//! bracketing range leaves an error of at most `(max(1,p)/(p+1))^k / 2`.
//!
//! Inputs are taken at their exact binary value: `1.0 / 3.0` is slightly
//! below one third and is *not* on the central plateau. For `p` near 1 the
//! difference is negligible; for very small or very large `p` the
//! distribution carries visible mass within one ulp of the plateau edges.
//! [`PLATEAU_START`] and [`PLATEAU_END`] are the outermost doubles inside
//! the closed plateau `[1/3, 2/3]`.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::ternary::{Branch, TernaryPoint};

/// Smallest double that is `>= 1/3`.
pub const PLATEAU_START: f64 = 0.33333333333333337;
/// Largest double that is `<= 2/3`.
pub const PLATEAU_END: f64 = 2.0 / 3.0;

/// Family parameter `p > 0`; `p = 1` is the Cantor distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PSingularParams {
    p: f64,
}

impl PSingularParams {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Self { p })
        } else {
            Err(Error::Parameter(format!("p must be a finite positive real, got {p}")))
        }
    }

    /// The classical Cantor distribution.
    pub fn cantor() -> Self {
        Self { p: 1.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Mass of the left third, `1/(p+1)`; also the plateau height.
    pub fn left_mass(&self) -> f64 {
        1.0 / (self.p + 1.0)
    }

    /// Mass of the right third, `p/(p+1)`.
    pub fn right_mass(&self) -> f64 {
        self.p / (self.p + 1.0)
    }

    /// Per-level contraction of the CDF recursion, `max(1,p)/(p+1)`.
    pub fn contraction(&self) -> f64 {
        self.p.max(1.0) / (self.p + 1.0)
    }
}

/// Tolerance and recursion budget shared by all evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tolerance: f64,
    pub max_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_depth: 100_000,
        }
    }
}

impl EvalConfig {
    pub fn new(tolerance: f64, max_depth: usize) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {tolerance}")));
        }
        if max_depth == 0 {
            return Err(Error::Parameter("max_depth must be at least 1".into()));
        }
        Ok(Self { tolerance, max_depth })
    }

    pub fn with_tolerance(tolerance: f64) -> Result<Self> {
        Self::new(tolerance, Self::default().max_depth)
    }

    /// Smallest depth `k` with `contraction^k <= tolerance`, capped at
    /// `max_depth`.
    pub fn depth_for(&self, contraction: f64) -> usize {
        depth_for(self.tolerance, contraction, self.max_depth)
    }
}

pub(crate) fn depth_for(tolerance: f64, contraction: f64, max_depth: usize) -> usize {
    if tolerance >= 1.0 {
        return 1;
    }
    let levels = (tolerance.ln() / contraction.ln()).ceil();
    if levels.is_finite() && levels < max_depth as f64 {
        (levels as usize).max(1)
    } else {
        max_depth
    }
}

/// A value together with a bound on its absolute truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub error_bound: f64,
}

/// `F(x)` and `1 - F(x)` from a single descent; the survival value is
/// accumulated separately so it keeps full relative precision near `x = 1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CdfWalk {
    pub cdf: f64,
    pub survival: f64,
    pub error_bound: f64,
}

/// `F(x0) = c + d X(s)` where `X` is either `F` or `1 - F` at the current
/// state `s`; all coefficients stay nonnegative, so neither `F` nor `1 - F`
/// suffers cancellation.
#[derive(Clone, Copy)]
struct Affine {
    c: f64,
    d: f64,
    on_survival: bool,
}

impl Affine {
    fn left(&mut self, left: f64, right: f64) {
        // F(s) = L F(3s);  1 - F(s) = R + L (1 - F(3s))
        if self.on_survival {
            self.c += self.d * right;
        }
        self.d *= left;
    }

    fn right(&mut self, left: f64, right: f64) {
        // F(s) = L + R (1 - F(s'));  1 - F(s) = R F(s')
        if !self.on_survival {
            self.c += self.d * left;
        }
        self.d *= right;
        self.on_survival = !self.on_survival;
    }

    fn resolve(&self, cdf_at_state: f64) -> f64 {
        let v = if self.on_survival {
            1.0 - cdf_at_state
        } else {
            cdf_at_state
        };
        self.c + self.d * v
    }
}

pub(crate) fn walk_cdf(params: &PSingularParams, mut point: TernaryPoint, depth: usize) -> CdfWalk {
    let left = params.left_mass();
    let right = params.right_mass();
    let mut f = Affine {
        c: 0.0,
        d: 1.0,
        on_survival: false,
    };
    let mut g = Affine {
        c: 0.0,
        d: 1.0,
        on_survival: true,
    };
    for _ in 0..depth {
        match point.step() {
            Branch::Zero => {
                return CdfWalk {
                    cdf: f.resolve(0.0),
                    survival: g.resolve(0.0),
                    error_bound: 0.0,
                }
            }
            Branch::Middle => {
                // F = L and 1 - F = R on the plateau.
                let at = |a: &Affine| a.c + a.d * if a.on_survival { right } else { left };
                return CdfWalk {
                    cdf: at(&f),
                    survival: at(&g),
                    error_bound: 0.0,
                };
            }
            Branch::Left => {
                f.left(left, right);
                g.left(left, right);
            }
            Branch::Right => {
                f.right(left, right);
                g.right(left, right);
            }
        }
    }
    let half = 0.5 * f.d;
    CdfWalk {
        cdf: f.c + half,
        survival: g.c + half,
        error_bound: half,
    }
}

pub(crate) fn cdf_walk_at(params: &PSingularParams, x: f64, config: &EvalConfig) -> CdfWalk {
    if x == 0.0 {
        return CdfWalk {
            cdf: 0.0,
            survival: 1.0,
            error_bound: 0.0,
        };
    }
    if x == 1.0 {
        return CdfWalk {
            cdf: 1.0,
            survival: 0.0,
            error_bound: 0.0,
        };
    }
    walk_cdf(params, TernaryPoint::new(x), config.depth_for(params.contraction()))
}

/// `F_p(x)` with its truncation bound.
pub fn cdf_bounded(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<Bounded> {
    check_unit_interval(x, "x")?;
    let w = cdf_walk_at(params, x, config);
    Ok(Bounded {
        value: w.cdf.clamp(0.0, 1.0),
        error_bound: w.error_bound,
    })
}

/// `F_p(x)` to within `config.tolerance` (unless `max_depth` binds first).
pub fn cdf(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<f64> {
    cdf_bounded(params, x, config).map(|b| b.value)
}

/// `1 - F_p(x)` with its truncation bound.
pub fn survival_bounded(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<Bounded> {
    check_unit_interval(x, "x")?;
    let w = cdf_walk_at(params, x, config);
    Ok(Bounded {
        value: w.survival.clamp(0.0, 1.0),
        error_bound: w.error_bound,
    })
}

pub fn survival(params: &PSingularParams, x: f64, config: &EvalConfig) -> Result<f64> {
    survival_bounded(params, x, config).map(|b| b.value)
}

/// Number of branch maps composed per sample; `3^-36` is below half an ulp
/// of any value in `[1/3, 1]`.
pub const SAMPLE_DEPTH: u32 = 36;

/// Draws from `F_p` as a random composition of the two branch maps: with
/// probability `1/(p+1)` shrink (`x/3`), otherwise shrink and reflect
/// (`1 - x/3`). The reflection is what makes the right third carry `p F`
/// rather than a translated copy of `F`; the two coincide only at `p = 1`.
#[derive(Debug, Clone, Copy)]
pub struct PSingularSampler {
    right_prob: f64,
    depth: u32,
}

impl PSingularSampler {
    pub fn new(params: &PSingularParams) -> Self {
        Self {
            right_prob: params.right_mass(),
            depth: SAMPLE_DEPTH,
        }
    }
}

impl Distribution<f64> for PSingularSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Innermost map first; the branch choices are i.i.d. so the draw
        // order does not matter.
        let mut x = 0.0;
        for _ in 0..self.depth {
            x /= 3.0;
            if rng.gen::<f64>() < self.right_prob {
                x = 1.0 - x;
            }
        }
        x
    }
}

/// `n` i.i.d. draws from `F_p`, deterministic in `seed`.
pub fn sample(params: &PSingularParams, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = PSingularSampler::new(params);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

/// A maximal open interval removed at some stage of the Cantor construction.
/// `F_p` is constant on its closure for every `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapInterval {
    /// Construction stage, starting at 1 for `(1/3, 2/3)`.
    pub level: u32,
    /// Nearest double to the left endpoint.
    pub start: f64,
    /// Nearest double to the right endpoint.
    pub end: f64,
}

impl GapInterval {
    /// Outermost doubles strictly inside the gap.
    pub fn interior(&self) -> (f64, f64) {
        (self.start.next_up(), self.end.next_down())
    }

    pub fn width(&self) -> f64 {
        3f64.powi(-(self.level as i32))
    }
}

/// Gaps removed at stage `level`, in increasing order. There are
/// `2^(level-1)` of them.
pub fn gap_intervals(level: u32) -> Vec<GapInterval> {
    assert!((1..=33).contains(&level), "gap level must be in 1..=33");
    let denom = 3f64.powi(level as i32);
    // Left endpoints are (3k+1)/3^level where k has ternary digits in {0,2}.
    (0..1u64 << (level - 1))
        .map(|bits| {
            let mut k = 0u64;
            for i in (0..level - 1).rev() {
                k = 3 * k + 2 * ((bits >> i) & 1);
            }
            GapInterval {
                level,
                start: (3 * k + 1) as f64 / denom,
                end: (3 * k + 2) as f64 / denom,
            }
        })
        .collect()
}

/// All gaps of stages `1..=max_level`, sorted by position.
pub fn gaps_up_to(max_level: u32) -> Vec<GapInterval> {
    let mut gaps: Vec<_> = (1..=max_level).flat_map(gap_intervals).collect();
    gaps.sort_by(|a, b| a.start.total_cmp(&b.start));
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EvalConfig {
        EvalConfig::default()
    }

    /// Independent oracle: iterate the functional equations on floats to a
    /// fixed depth of 60.
    fn brute_cdf(p: f64, x: f64) -> f64 {
        fn go(p: f64, x: f64, depth: u32) -> f64 {
            if depth == 0 {
                return 0.5;
            }
            if x <= 0.0 {
                0.0
            } else if x < 1.0 / 3.0 {
                go(p, 3.0 * x, depth - 1) / (p + 1.0)
            } else if x <= 2.0 / 3.0 {
                1.0 / (p + 1.0)
            } else {
                1.0 - p * go(p, 3.0 * (1.0 - x), depth - 1) / (p + 1.0)
            }
        }
        go(p, x, 60)
    }

    #[test]
    fn rejects_non_positive_p() {
        assert!(matches!(PSingularParams::new(0.0), Err(Error::Parameter(_))));
        assert!(matches!(PSingularParams::new(-1.0), Err(Error::Parameter(_))));
        assert!(matches!(PSingularParams::new(f64::NAN), Err(Error::Parameter(_))));
        assert!(PSingularParams::new(1e-12).is_ok());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(EvalConfig::new(0.0, 10).is_err());
        assert!(EvalConfig::new(1e-10, 0).is_err());
    }

    #[test]
    fn depth_honours_contraction() {
        let c = EvalConfig::new(1e-12, 1_000_000).unwrap();
        let p100 = PSingularParams::new(100.0).unwrap();
        let d = c.depth_for(p100.contraction());
        assert!(p100.contraction().powi(d as i32) <= 1e-12);
        assert!(p100.contraction().powi(d as i32 - 1) > 1e-12);
        let capped = EvalConfig::new(1e-12, 50).unwrap();
        assert_eq!(capped.depth_for(p100.contraction()), 50);
    }

    #[test]
    fn plateau_constants_bracket_the_middle_third() {
        assert_eq!(PLATEAU_START, (1.0f64 / 3.0).next_up());
        assert_eq!(PLATEAU_END, 2.0 / 3.0);
        for p in [0.01, 1.0, 100.0] {
            let params = PSingularParams::new(p).unwrap();
            for x in [PLATEAU_START, 0.5, PLATEAU_END] {
                assert_eq!(cdf(&params, x, &cfg()).unwrap(), 1.0 / (p + 1.0));
            }
            // Just left of the plateau; for large p the drop is below an ulp.
            if p <= 1.0 {
                assert!(cdf(&params, 1.0 / 3.0, &cfg()).unwrap() < 1.0 / (p + 1.0));
            }
        }
    }

    #[test]
    fn spec_examples() {
        let cantor = PSingularParams::cantor();
        assert!((cdf(&cantor, 1.0 / 3.0, &cfg()).unwrap() - 0.5).abs() <= 1e-10);
        for p in [0.3, 1.0, 7.0] {
            let params = PSingularParams::new(p).unwrap();
            assert_eq!(cdf(&params, 0.0, &cfg()).unwrap(), 0.0);
            assert_eq!(cdf(&params, 1.0, &cfg()).unwrap(), 1.0);
            assert_eq!(survival(&params, 1.0, &cfg()).unwrap(), 0.0);
        }
        // 1/4 = 0.0202..._3 and F(1/4) = 1/3 for the Cantor function.
        assert!((brute_cdf(1.0, 0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cdf(&cantor, 0.25, &cfg()).unwrap() - 1.0 / 3.0).abs() <= 1e-10);
        let p2 = PSingularParams::new(2.0).unwrap();
        assert!((cdf(&p2, 1.0 / 9.0, &cfg()).unwrap() - 1.0 / 9.0).abs() <= 1e-10);
        assert_eq!(survival(&cantor, 0.5, &cfg()).unwrap(), 0.5);
        assert!((survival(&p2, PLATEAU_START, &cfg()).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let c = PSingularParams::cantor();
        assert!(matches!(cdf(&c, -0.1, &cfg()), Err(Error::Domain(_))));
        assert!(matches!(cdf(&c, 1.5, &cfg()), Err(Error::Domain(_))));
        assert!(matches!(survival(&c, f64::NAN, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn agrees_with_float_oracle_away_from_edges() {
        // The float oracle rounds 3x each step; on p = 1 its error stays far
        // below the tolerance.
        let c = PSingularParams::cantor();
        for i in 1..2000 {
            let x = i as f64 / 2000.0 + 1e-7;
            if x > 1.0 {
                continue;
            }
            let got = cdf(&c, x, &cfg()).unwrap();
            assert!((got - brute_cdf(1.0, x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn truncation_reports_its_bound() {
        let c = PSingularParams::cantor();
        let shallow = EvalConfig::new(1e-10, 4).unwrap();
        let b = cdf_bounded(&c, 0.25, &shallow).unwrap();
        assert!(b.error_bound > 0.0 && b.error_bound <= 0.5f64.powi(4));
        assert!((b.value - 1.0 / 3.0).abs() <= b.error_bound);
    }

    #[test]
    fn survival_keeps_precision_near_one() {
        let c = PSingularParams::cantor();
        // 1 - F(1 - 3^-20) = F(3^-20) = 2^-20 for the Cantor function.
        let y = 3f64.powi(-20);
        let s = survival(&c, 1.0 - y, &cfg()).unwrap();
        assert!((s / 0.5f64.powi(20) - 1.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn sampler_is_deterministic_and_avoids_digit_one() {
        let params = PSingularParams::new(0.7).unwrap();
        let a = sample(&params, 42, 500).unwrap();
        let b = sample(&params, 42, 500).unwrap();
        assert_eq!(a, b);
        for &x in &a {
            assert!((0.0..=1.0).contains(&x));
            let mut pt = TernaryPoint::new(x);
            for _ in 0..20 {
                assert_ne!(pt.step(), Branch::Middle, "x={x}");
            }
        }
        assert!(sample(&params, 1, 0).is_err());
    }

    #[test]
    fn sample_means_match_closed_form() {
        for p in [0.25, 1.0, 2.0, 6.0] {
            let params = PSingularParams::new(p).unwrap();
            let xs = sample(&params, 7, 200_000).unwrap();
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            let want = 3.0 * p / (2.0 * (2.0 * p + 1.0));
            assert!((m - want).abs() <= 4.0 * (var / n).sqrt(), "p={p}: {m} vs {want}");
        }
    }

    #[test]
    fn empirical_cdf_within_dkw_band() {
        // P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2), at confidence 0.999.
        let n = 1_000_000;
        let eps = ((2.0f64 / 0.001).ln() / (2.0 * n as f64)).sqrt();
        for p in [0.5, 3.0] {
            let params = PSingularParams::new(p).unwrap();
            let mut xs = sample(&params, 11, n).unwrap();
            xs.sort_by(f64::total_cmp);
            let mut sup: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = cdf(&params, x, &cfg()).unwrap();
                sup = sup
                    .max((f - i as f64 / n as f64).abs())
                    .max((f - (i + 1) as f64 / n as f64).abs());
            }
            assert!(sup <= eps, "p={p}: sup = {sup}, band = {eps}");
        }
    }

    #[test]
    fn gap_structure() {
        let g1 = gap_intervals(1);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1[0].start, 1.0 / 3.0);
        let g3 = gap_intervals(3);
        assert_eq!(g3.len(), 4);
        let starts: Vec<f64> = g3.iter().map(|g| g.start * 27.0).collect();
        for (s, want) in starts.iter().zip([1.0, 7.0, 19.0, 25.0]) {
            assert!((s - want).abs() < 1e-12);
        }
        let all = gaps_up_to(8);
        assert_eq!(all.len(), 255);
        assert!(all.windows(2).all(|w| w[0].end < w[1].start));
        for g in &all {
            let (a, b) = g.interior();
            assert!(a > g.start && b < g.end && a < b);
        }
    }
}
