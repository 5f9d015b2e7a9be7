//! Exact descent through the ternary structure of a machine real.
//!
//! Every finite `f64` in `[0, 1]` is a dyadic rational `num / 2^shift`. The
//! maps `x -> 3x` and `x -> 3 - 3x` keep the denominator fixed, so the whole
//! descent runs in integer arithmetic and never accumulates rounding error.
//! Deep levels matter when `p` is far from 1: the value contributed at level
//! `k` is weighted by `(max(1,p)/(p+1))^k`, which decays slowly, while a
//! floating-point `3x` loses one ternary digit of the input per step.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Which third of `[0, 1]` the current point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    /// The point is exactly 0.
    Zero,
    /// `x < 1/3`; the state becomes `3x`.
    Left,
    /// `1/3 <= x <= 2/3`; the state is left unchanged.
    Middle,
    /// `x > 2/3`; the state becomes `3(1 - x)`.
    Right,
}

// `3 * num < 3 * 2^125 < 2^127` keeps every intermediate inside a u128.
const SMALL_SHIFT_LIMIT: u32 = 125;

#[derive(Debug, Clone)]
enum Repr {
    Small { num: u128, shift: u32 },
    Big { num: BigUint, shift: u32 },
}

/// A point of `[0, 1]` held exactly as `num / 2^shift`.
#[derive(Debug, Clone)]
pub(crate) struct TernaryPoint {
    repr: Repr,
}

impl TernaryPoint {
    /// Exact representation of `x`. The caller guarantees `0 <= x <= 1`.
    pub(crate) fn new(x: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&x));
        if x == 0.0 {
            return Self {
                repr: Repr::Small { num: 0, shift: 0 },
            };
        }
        let bits = x.to_bits();
        let exp_field = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mut mantissa, mut exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let tz = mantissa.trailing_zeros();
        mantissa >>= tz;
        exp += tz as i32;
        if exp >= 0 {
            // Only x = 1 is an integer here.
            return Self {
                repr: Repr::Small { num: 1, shift: 0 },
            };
        }
        let shift = (-exp) as u32;
        let repr = if shift <= SMALL_SHIFT_LIMIT {
            Repr::Small {
                num: mantissa as u128,
                shift,
            }
        } else {
            Repr::Big {
                num: BigUint::from(mantissa),
                shift,
            }
        };
        Self { repr }
    }

    /// Classifies the current point and applies the matching map.
    #[inline]
    pub(crate) fn step(&mut self) -> Branch {
        match &mut self.repr {
            Repr::Small { num, shift } => {
                if *num == 0 {
                    return Branch::Zero;
                }
                let one = 1u128 << *shift;
                let t = 3 * *num;
                if t < one {
                    *num = t;
                    Branch::Left
                } else if t <= 2 * one {
                    Branch::Middle
                } else {
                    *num = 3 * one - t;
                    Branch::Right
                }
            }
            Repr::Big { num, shift } => {
                if num.is_zero() {
                    return Branch::Zero;
                }
                let one = BigUint::from(1u8) << *shift;
                let t = &*num * 3u8;
                if t < one {
                    *num = t;
                    Branch::Left
                } else if t <= &one * 2u8 {
                    Branch::Middle
                } else {
                    *num = one * 3u8 - t;
                    Branch::Right
                }
            }
        }
    }

    /// Current point as a float.
    pub(crate) fn to_f64(&self) -> f64 {
        match &self.repr {
            Repr::Small { num, shift } => *num as f64 * pow2(-(*shift as i32)),
            Repr::Big { num, shift } => big_ratio(num, *shift),
        }
    }

    /// `x - 1/3` for a point in the middle third, computed from the exact
    /// numerator `3 num - 2^shift`.
    pub(crate) fn middle_offset(&self) -> f64 {
        match &self.repr {
            Repr::Small { num, shift } => {
                let excess = 3 * *num - (1u128 << *shift);
                excess as f64 * pow2(-(*shift as i32)) / 3.0
            }
            Repr::Big { num, shift } => {
                let excess = num * 3u8 - (BigUint::from(1u8) << *shift);
                big_ratio(&excess, *shift) / 3.0
            }
        }
    }
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn big_ratio(num: &BigUint, shift: u32) -> f64 {
    let bits = num.bits();
    if bits <= 64 {
        let top = num.to_u64().unwrap_or(u64::MAX) as f64;
        return scale2(top, -(shift as i64));
    }
    let drop = bits - 64;
    let top = (num >> drop).to_u64().unwrap_or(u64::MAX) as f64;
    scale2(top, drop as i64 - shift as i64)
}

// Splits large exponents so intermediate powers neither overflow nor flush.
fn scale2(mut v: f64, mut e: i64) -> f64 {
    while e < -1000 {
        v *= pow2(-1000);
        e += 1000;
    }
    v * pow2(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digits(x: f64, n: usize) -> Vec<Branch> {
        let mut pt = TernaryPoint::new(x);
        (0..n).map(|_| pt.step()).collect()
    }

    #[test]
    fn quarter_lands_on_the_fold_fixed_point() {
        // 1/4 -> 3/4, and 3 - 3(3/4) = 3/4.
        let d = digits(0.25, 6);
        use Branch::*;
        assert_eq!(d, vec![Left, Right, Right, Right, Right, Right]);
        // 1/10 -> 3/10 -> 9/10 -> 3/10 -> ...
        assert_eq!(digits(0.1, 5), vec![Left, Left, Right, Left, Right]);
    }

    #[test]
    fn one_maps_to_zero() {
        let mut pt = TernaryPoint::new(1.0);
        assert_eq!(pt.step(), Branch::Right);
        assert_eq!(pt.step(), Branch::Zero);
    }

    #[test]
    fn half_is_middle() {
        let pt0 = TernaryPoint::new(0.5);
        let mut pt = pt0.clone();
        assert_eq!(pt.step(), Branch::Middle);
        assert!((pt.middle_offset() - (0.5 - 1.0 / 3.0)).abs() < 1e-16);
        assert_eq!(pt.to_f64(), 0.5);
    }

    #[test]
    fn float_one_third_sits_just_below_the_plateau() {
        // fl(1/3) < 1/3, so the first exact step goes left, landing just
        // below 1 and then right.
        let d = digits(1.0 / 3.0, 2);
        assert_eq!(d, vec![Branch::Left, Branch::Right]);
    }

    #[test]
    fn tiny_values_use_the_wide_representation() {
        let x = 1e-300;
        let mut pt = TernaryPoint::new(x);
        assert!(matches!(pt.repr, Repr::Big { .. }));
        assert!((pt.to_f64() - x).abs() <= x * 1e-15);
        let mut lefts = 0;
        while pt.step() == Branch::Left {
            lefts += 1;
        }
        // 3^k x reaches [1/3, 1) after floor(-ln(x)/ln(3)) steps or so.
        let expected = (-(x.ln()) / 3f64.ln()).floor() as i32;
        assert!((lefts - expected).abs() <= 1, "{lefts} vs {expected}");
    }

    #[test]
    fn subnormal_input_is_exact() {
        let x = f64::from_bits(1);
        let pt = TernaryPoint::new(x);
        assert_eq!(pt.to_f64(), x);
    }
}
