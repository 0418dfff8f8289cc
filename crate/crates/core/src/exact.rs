//! Exact numbers of the form `r · q^{h/2}` with `r` rational.
//!
//! Harish-Chandra values, cocycle values `q^{B/2}` and cell measures all
//! live in this set. Multiplication is always exact; addition is exact when
//! both exponents have the same parity.

use std::fmt;
use std::ops::Mul;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Integer types usable as the numerator/denominator of a [`ScaledValue`].
pub trait ExactInt: Clone + Integer + Signed + FromPrimitive + fmt::Display + fmt::Debug {}
impl<I> ExactInt for I where I: Clone + Integer + Signed + FromPrimitive + fmt::Display + fmt::Debug {}

/// `r · base^{h/2}`.
///
/// The pair `(r, h)` is not kept canonical; equality and display go
/// through [`ScaledValue::canonical`], which moves even powers of `base`
/// into `r` and leaves `h ∈ {-1, 0}`.
#[derive(Clone, Debug)]
pub struct ScaledValue<I: ExactInt> {
    base: u32,
    r: Ratio<I>,
    h: i64,
}

fn int<I: ExactInt>(x: u32) -> I {
    I::from_u32(x).expect("base representable")
}

fn pow<I: ExactInt>(base: u32, e: u64) -> I {
    num_traits::pow(int::<I>(base), e as usize)
}

impl<I: ExactInt> ScaledValue<I> {
    pub fn new(base: u32, r: Ratio<I>, h: i64) -> Self {
        assert!(base >= 2, "base must be at least 2");
        ScaledValue { base, r, h }
    }

    pub fn from_ratio(base: u32, r: Ratio<I>) -> Self {
        Self::new(base, r, 0)
    }

    pub fn zero(base: u32) -> Self {
        Self::new(base, Ratio::zero(), 0)
    }

    pub fn one(base: u32) -> Self {
        Self::new(base, Ratio::one(), 0)
    }

    /// `base^{h/2}`.
    pub fn half_power(base: u32, h: i64) -> Self {
        Self::new(base, Ratio::one(), h)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn rational(&self) -> &Ratio<I> {
        &self.r
    }

    pub fn half_exponent(&self) -> i64 {
        self.h
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero()
    }

    /// Rewrites `r · base^{h/2}` with `h` replaced by `target`, which must
    /// have the same parity as `h`.
    fn rescaled(&self, target: i64) -> Ratio<I> {
        debug_assert_eq!((self.h - target).rem_euclid(2), 0);
        let k = (self.h - target) / 2;
        if k >= 0 {
            self.r.clone() * Ratio::from_integer(pow::<I>(self.base, k as u64))
        } else {
            self.r.clone() / Ratio::from_integer(pow::<I>(self.base, (-k) as u64))
        }
    }

    /// Canonical representative with `h ∈ {-1, 0}` (zero maps to `h = 0`).
    pub fn canonical(&self) -> Self {
        if self.r.is_zero() {
            return Self::zero(self.base);
        }
        let target = if self.h.rem_euclid(2) == 0 { 0 } else { -1 };
        Self::new(self.base, self.rescaled(target), target)
    }

    /// Exact sum; `None` when the exponents have different parity and both
    /// terms are nonzero (the result would not be of the form `r·q^{h/2}`).
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.base, other.base, "mixed bases");
        if other.is_zero() {
            return Some(self.clone());
        }
        if self.is_zero() {
            return Some(other.clone());
        }
        if (self.h - other.h).rem_euclid(2) != 0 {
            return None;
        }
        let h = self.h.min(other.h);
        Some(Self::new(
            self.base,
            self.rescaled(h) + other.rescaled(h),
            h,
        ))
    }

    /// Exact quotient by a nonzero rational.
    pub fn div_ratio(&self, d: &Ratio<I>) -> Self {
        Self::new(self.base, self.r.clone() / d.clone(), self.h)
    }

    /// Returns the value as an exact rational when `h` is even.
    pub fn to_ratio(&self) -> Option<Ratio<I>> {
        if self.h.rem_euclid(2) == 0 {
            Some(self.rescaled(0))
        } else {
            None
        }
    }

    pub fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl<I: ExactInt> ScaledValue<I>
where
    Ratio<I>: ToPrimitive,
{
    /// Double-precision value. Falls back to the log domain when the
    /// rational or the power would overflow on its own.
    pub fn to_f64(&self) -> f64 {
        if self.r.is_zero() {
            return 0.0;
        }
        if let Some(x) = self.direct_f64() {
            return x;
        }
        if let Some(x) = self.canonical().direct_f64() {
            return x;
        }
        let q = self.base as f64;
        let sign = if self.r.is_negative() { -1.0 } else { 1.0 };
        let ln_num = ln_abs(self.r.numer());
        let ln_den = ln_abs(self.r.denom());
        sign * (ln_num - ln_den + self.h as f64 / 2.0 * q.ln()).exp()
    }

    fn direct_f64(&self) -> Option<f64> {
        let rf = self.r.to_f64()?;
        let scale = (self.base as f64).powf(self.h as f64 / 2.0);
        let x = rf * scale;
        (rf.is_finite() && rf != 0.0 && scale.is_finite() && scale != 0.0 && x.is_finite())
            .then_some(x)
    }
}

fn ln_abs<I: ExactInt>(x: &I) -> f64 {
    // Digit-count based logarithm; fine for display-precision fallbacks.
    let s = x.abs().to_string();
    let lead: f64 = s
        .chars()
        .take(17)
        .collect::<String>()
        .parse()
        .unwrap_or(1.0);
    lead.ln() + (s.len().saturating_sub(17)) as f64 * std::f64::consts::LN_10
}

impl<I: ExactInt> Mul for ScaledValue<I> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.base, rhs.base, "mixed bases");
        Self::new(self.base, self.r * rhs.r, self.h + rhs.h)
    }
}

impl<I: ExactInt> PartialEq for ScaledValue<I> {
    fn eq(&self, other: &Self) -> bool {
        if self.base != other.base {
            return false;
        }
        let a = self.canonical();
        let b = other.canonical();
        a.h == b.h && a.r == b.r
    }
}

impl<I: ExactInt> Eq for ScaledValue<I> {}

impl<I: ExactInt> fmt::Display for ScaledValue<I> {
    /// Canonical form: `5/6`, `4/3*2^(-1/2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.canonical();
        if c.h == 0 {
            write!(f, "{}", c.r)
        } else {
            write!(f, "{}*{}^(-1/2)", c.r, c.base)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    type S = ScaledValue<BigInt>;

    fn r(n: i64, d: i64) -> Ratio<BigInt> {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn canonical_moves_even_powers() {
        let x = S::new(2, r(4, 3), -1);
        assert_eq!(x.to_string(), "4/3*2^(-1/2)");
        let y = S::new(2, r(2, 3), -3);
        assert_eq!(y.to_string(), "1/3*2^(-1/2)");
        let z = S::new(3, r(1, 1), 4);
        assert_eq!(z.to_string(), "9");
        assert_eq!(S::new(2, r(8, 3), 1), S::new(2, r(4, 3), 3));
    }

    #[test]
    fn addition_requires_matching_parity() {
        let a = S::half_power(2, 1);
        let b = S::half_power(2, -1);
        // 2^(1/2) + 2^(-1/2) = 3 * 2^(-1/2)
        assert_eq!(a.checked_add(&b).unwrap(), S::new(2, r(3, 1), -1));
        assert!(a.checked_add(&S::one(2)).is_none());
        assert_eq!(a.checked_add(&S::zero(2)).unwrap(), a);
    }

    #[test]
    fn to_f64_handles_extreme_exponents() {
        let x = S::new(2, r(3, 1), -4000);
        let expected = (3.0f64).ln() - 2000.0 * 2f64.ln();
        assert!((x.to_f64().ln() - expected).abs() < 1e-9 || x.to_f64() == 0.0);
        let y = S::new(2, Ratio::from_integer(BigInt::from(2).pow(3000u32)), -6000);
        assert_eq!(y.to_f64(), 1.0);
        assert!((S::new(2, r(4, 3), -1).to_f64() - 4.0 / 3.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fixed_width_integers_work() {
        let a = ScaledValue::<i128>::new(5, Ratio::new(7, 25), 2);
        assert_eq!(a.to_ratio().unwrap(), Ratio::new(7, 5));
        assert_eq!(
            a.clone() * a,
            ScaledValue::<i128>::new(5, Ratio::new(49, 25), 0)
        );
    }

    proptest! {
        #[test]
        fn mul_then_f64_matches_f64_product(
            n1 in 1i64..50, d1 in 1i64..50, h1 in -12i64..12,
            n2 in 1i64..50, d2 in 1i64..50, h2 in -12i64..12,
            q in 2u32..7,
        ) {
            let a = S::new(q, r(n1, d1), h1);
            let b = S::new(q, r(n2, d2), h2);
            let p = (a.clone() * b.clone()).to_f64();
            let expected = a.to_f64() * b.to_f64();
            prop_assert!((p - expected).abs() <= 1e-12 * expected.abs());
        }

        #[test]
        fn same_parity_sum_is_exact(
            n1 in 0i64..50, h1 in -10i64..10, n2 in 0i64..50, k in -5i64..5, q in 2u32..6,
        ) {
            let a = S::new(q, r(n1, 7), h1);
            let b = S::new(q, r(n2, 11), h1 + 2 * k);
            let s = a.checked_add(&b).unwrap();
            let expected = a.to_f64() + b.to_f64();
            prop_assert!((s.to_f64() - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
            prop_assert_eq!(s.clone(), b.checked_add(&a).unwrap());
        }
    }
}
