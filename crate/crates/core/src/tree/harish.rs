//! Harish-Chandra function of the tree and the exact ball sums of `Ξ²`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::ScaledValue;
use crate::tree::geometry::{busemann_profile, sphere_volume_int, BoundaryCell, Vertex};

fn ratio(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `Ξ(m) = (1 + m(q−1)/(q+1)) · q^{−m/2}`.
pub fn xi_closed(q: u32, m: usize) -> ScaledValue<BigInt> {
    let (q_, m_) = (BigInt::from(q), BigInt::from(m));
    let num = &q_ + 1 + &m_ * (&q_ - 1);
    ScaledValue::new(q, ratio(num, &q_ + 1), -(m as i64))
}

/// `Ξ(m) = ∫ q^{B_x(x₀,u)/2} dν(x)` summed exactly over the Busemann level
/// sets of `∂T`, for `u` at distance `m`.
pub fn xi_oracle(q: u32, m: usize) -> ScaledValue<BigInt> {
    let u = Vertex::from_word_unchecked(vec![0; m]);
    busemann_profile(q, &BoundaryCell::whole(), &u)
        .into_iter()
        .map(|(b, mass)| ScaledValue::new(q, mass, b))
        .fold(ScaledValue::zero(q), |acc, t| {
            acc.checked_add(&t)
                .expect("Busemann values share the parity of m")
        })
}

/// `vol(S_m) · Ξ(m)² = (q+1+m(q−1))² / (q(q+1))` for `m ≥ 1`.
fn sphere_mass(q: u32, m: usize) -> BigRational {
    if m == 0 {
        return BigRational::one();
    }
    let (q_, m_) = (BigInt::from(q), BigInt::from(m));
    let a = &q_ + 1 + &m_ * (&q_ - 1);
    ratio(&a * &a, &q_ * (&q_ + 1))
}

/// `∫_{B_n} Ξ(g)² dg = Σ_{m ≤ n} vol(S_m) Ξ(m)²`.
pub fn ball_xi2(q: u32, n: usize) -> BigRational {
    // all terms with m ≥ 1 share the denominator q(q+1)
    let mut num = BigInt::zero();
    let (q_, b) = (BigInt::from(q), BigInt::from(q) - 1);
    let mut a = &q_ + 1;
    for _ in 1..=n {
        a += &b;
        num += &a * &a;
    }
    BigRational::one() + ratio(num, &q_ * (&q_ + 1))
}

/// Same sum through `sphere_volume · xi_closed²` term by term.
pub fn ball_xi2_termwise(q: u32, n: usize) -> BigRational {
    (0..=n)
        .map(|m| {
            let term =
                ScaledValue::from_ratio(q, BigRational::from_integer(sphere_volume_int(q, m)))
                    * xi_closed(q, m).square();
            term.to_ratio().expect("even exponent")
        })
        .sum()
}

/// `(∫_{B_{n+n₀}} Ξ² − ∫_{B_{n−n₀}} Ξ²) / ∫_{B_n} Ξ²`.
pub fn folner_ratio(q: u32, n: usize, n0: usize) -> Result<BigRational> {
    if n <= n0 {
        return Err(Error::InvalidParameter(format!(
            "need n > n0, got n={n}, n0={n0}"
        )));
    }
    Ok((ball_xi2(q, n + n0) - ball_xi2(q, n - n0)) / ball_xi2(q, n))
}

/// Leading constant `(q−1)² / (3q(q+1))` of `∫_{B_n} Ξ² ∼ c n³`.
pub fn cubic_constant(q: u32) -> BigRational {
    let q_ = BigInt::from(q);
    ratio((&q_ - 1) * (&q_ - 1), 3 * &q_ * (&q_ + 1))
}

/// Support of a bi-invariant measure on `Aut(T)`, as a set of spheres.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    Sphere(usize),
    Ball(usize),
    /// Spheres `lo..=hi`.
    Annulus(usize, usize),
}

/// Normalizing constant applied to Haar measure on the support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    Raw,
    /// Divide by `∫ Ξ²` over the support.
    #[default]
    Xi2,
    /// Divide by `n³ (q−1)² / (3q(q+1))`, the leading term of the ball sum.
    Poly,
}

/// Symmetric, `K`-bi-invariant measure: normalized Haar measure on a union
/// of spheres.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub normalization: Normalization,
}

impl MeasureSpec {
    pub fn new(kind: MeasureKind, normalization: Normalization) -> Result<Self> {
        if let MeasureKind::Annulus(lo, hi) = kind {
            if lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "empty annulus {lo}..={hi}"
                )));
            }
        }
        Ok(MeasureSpec {
            kind,
            normalization,
        })
    }

    pub fn ball(n: usize, normalization: Normalization) -> Self {
        MeasureSpec {
            kind: MeasureKind::Ball(n),
            normalization,
        }
    }

    pub fn spheres(&self) -> std::ops::RangeInclusive<usize> {
        match self.kind {
            MeasureKind::Sphere(m) => m..=m,
            MeasureKind::Ball(n) => 0..=n,
            MeasureKind::Annulus(lo, hi) => lo..=hi,
        }
    }

    /// `∫ Ξ²` over the support with respect to Haar measure.
    pub fn xi2_mass(&self, q: u32) -> BigRational {
        self.spheres().map(|m| sphere_mass(q, m)).sum()
    }

    /// Total mass of the normalizing divisor; `Poly` on a radius-0 support
    /// falls back to 1.
    pub fn normalizer(&self, q: u32) -> BigRational {
        match self.normalization {
            Normalization::Raw => BigRational::one(),
            Normalization::Xi2 => self.xi2_mass(q),
            Normalization::Poly => {
                let n = *self.spheres().end();
                if n == 0 {
                    BigRational::one()
                } else {
                    cubic_constant(q) * BigRational::from_integer(BigInt::from(n).pow(3))
                }
            }
        }
    }

    /// Weight of sphere `m` after normalization: `vol(S_m) / normalizer`.
    pub fn sphere_weight(&self, q: u32, m: usize) -> BigRational {
        BigRational::from_integer(sphere_volume_int(q, m)) / self.normalizer(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_closed(2, 0), ScaledValue::one(2));
        assert_eq!(xi_closed(2, 1), ScaledValue::new(2, rat(4, 3), -1));
        assert_eq!(xi_closed(2, 2), ScaledValue::from_ratio(2, rat(5, 6)));
        assert_eq!(xi_closed(2, 2).to_string(), "5/6");
        assert_eq!(xi_closed(2, 1).to_string(), "4/3*2^(-1/2)");
    }

    #[test]
    fn oracle_matches_closed_form() {
        for q in [2, 3, 5] {
            for m in 0..=30 {
                assert_eq!(xi_oracle(q, m), xi_closed(q, m), "q={q} m={m}");
            }
        }
    }

    #[test]
    fn ball_examples() {
        assert_eq!(ball_xi2(3, 0), rat(1, 1));
        assert_eq!(ball_xi2(2, 2), rat(47, 6));
        for q in [2, 3] {
            for n in 0..12 {
                assert_eq!(ball_xi2(q, n), ball_xi2_termwise(q, n));
            }
        }
        let big = ball_xi2(2, 10_000) * rat(18, 1)
            / BigRational::from_integer(BigInt::from(10u64).pow(12));
        let x = big.to_f64().unwrap();
        assert!((0.99..=1.01).contains(&x), "{x}");
    }

    #[test]
    fn folner_examples() {
        assert_eq!(folner_ratio(2, 5, 0).unwrap(), rat(0, 1));
        assert_eq!(folner_ratio(2, 10, 1).unwrap(), rat(365, 811));
        assert!(folner_ratio(2, 3, 3).is_err());
        let seq: Vec<_> = [10, 20, 40, 80]
            .iter()
            .map(|&n| folner_ratio(2, n, 1).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn folner_bound() {
        for n in 10..200 {
            assert!(folner_ratio(2, n, 1).unwrap() <= rat(8, n as i64));
        }
        for n0 in 1..4 {
            for n in 4 * n0..4 * n0 + 60 {
                assert!(folner_ratio(2, n + 1, n0).unwrap() < folner_ratio(2, n, n0).unwrap());
            }
        }
    }

    #[test]
    fn measure_spec_weights() {
        let mu = MeasureSpec::ball(2, Normalization::Xi2);
        assert_eq!(mu.normalizer(2), rat(47, 6));
        let total: BigRational = mu
            .spheres()
            .map(|m| mu.sphere_weight(2, m) * (xi_closed(2, m).square()).to_ratio().unwrap())
            .sum();
        assert_eq!(total, rat(1, 1));
        assert_eq!(
            MeasureSpec::ball(3, Normalization::Poly).normalizer(2),
            rat(27, 18)
        );
        assert!(MeasureSpec::new(MeasureKind::Annulus(3, 2), Normalization::Raw).is_err());
        let ann = MeasureSpec::new(MeasureKind::Annulus(9, 11), Normalization::Raw).unwrap();
        assert_eq!(ann.xi2_mass(2), ball_xi2(2, 11) - ball_xi2(2, 8));
    }
}
