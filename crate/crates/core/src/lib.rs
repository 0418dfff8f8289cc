//! Flip operators, asymptotic Schur orthogonality and Haar integration.
//!
//! The crate checks, on finite computational models, that the flip
//! operator `F(v ⊗ w) = w ⊗ v` is recovered from averages of
//! `π(g) ⊗ π(g⁻¹)`:
//!
//! * [`operator`]: finite-dimensional Hilbert-space machinery (flip,
//!   tensor means, coefficient pairings, spectral norms, span fitting).
//! * [`finite`]: exact checks on finite groups, where the Haar average is
//!   `F / d` for irreducible representations.
//! * [`tree`]: the boundary representation of `Aut(T)` for the
//!   `(q+1)`-regular tree, with exact Harish-Chandra sums and lazy Haar
//!   sampling of group elements.
//! * [`free`]: exact ball sums for boundary representations of free groups.
//!
//! Linear algebra is generic over the scalar type (`f32`/`f64`); exact
//! quantities use [`ScaledValue`], a rational times a half-integer power of
//! `q`, generic over the integer type.

pub mod error;
pub mod exact;
pub mod finite;
pub mod free;
pub mod operator;
pub mod scalar;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use exact::ScaledValue;
pub use scalar::Real;

use num_bigint::BigInt;

/// Double-precision complex vector.
pub type HVector = operator::Vector<f64>;
/// Double-precision dense complex operator.
pub type HOperator = operator::Operator<f64>;
/// Single-precision operator, mostly useful for cross-checking tolerances.
pub type HOperator32 = operator::Operator<f32>;
/// Double-precision weighted sample family.
pub type WeightedSamples<E> = operator::WeightedSamples<E, f64>;
/// Double-precision finite-group representation.
pub type MatrixRep = finite::MatrixRep<f64>;
/// Exact `r · q^{h/2}` with arbitrary-precision rationals.
pub type ExactScaled = ScaledValue<BigInt>;
/// Exact `r · q^{h/2}` with 128-bit rationals, for bounded depths.
pub type FastScaled = ScaledValue<i128>;
/// Complex double used for cylinder-function values and estimates.
pub type Complex64 = num_complex::Complex<f64>;
