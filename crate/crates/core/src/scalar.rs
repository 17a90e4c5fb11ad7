//! Coefficient field abstraction.
//!
//! The reduction and Frobenius code is written once over [`Scalar`] and runs
//! either in `f64` or in exact rationals. Every finite `f64` is a dyadic
//! rational, so converting model inputs with [`Scalar::from_f64`] is exact and
//! the rational path reproduces the algebra with no rounding at all.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Arithmetic is exact, so identities can be checked with `==`.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// Exact conversion of a finite float.
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Exact rational arithmetic.
pub type Rational = BigRational;

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("non-finite value in exact arithmetic")
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        // ToPrimitive on BigRational handles numerators beyond f64 range.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Converts a slice of floats.
pub fn lift<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::from_f64(x)).collect()
}

/// `(-1)^k` in the field.
pub fn sign<T: Scalar>(k: usize) -> T {
    if k % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `x` vanishes: exactly in an exact field, else relative to `scale`.
pub fn negligible<T: Scalar>(x: &T, scale: f64, rel_tol: f64) -> bool {
    if T::EXACT {
        x.is_zero()
    } else {
        x.to_f64().abs() <= rel_tol * scale
    }
}
