//! The scalar fields the rest of the crate is generic over.
//!
//! Three implementations exist: [`BigRational`] (exact rationals),
//! [`QuadraticNumber`](super::QuadraticNumber) (exact elements of a real
//! quadratic field) and `f64`. Exact fields never round; `f64` decides
//! "zero" with a relative tolerance supplied by the caller.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use super::scalar::{float_json, rational_json, Scalar};
use crate::error::Result;

/// Unit roundoff of `f64`.
pub const F64_EPS: f64 = f64::EPSILON * 0.5;

/// Default relative pivot threshold for rank decisions in float mode.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-9;

/// An ordered field with exact or floating arithmetic.
pub trait Field:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` for fields whose arithmetic never rounds.
    const EXACT: bool;
    /// Short name used in reports (`rational`, `quadratic`, `float`).
    const MODE: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn from_rational(r: &BigRational) -> Self;

    fn is_zero(&self) -> bool;
    /// Sign relative to zero.
    fn signum(&self) -> Ordering;

    fn to_f64(&self) -> f64;
    /// An `f64` approximation together with an absolute error bound.
    fn approx(&self) -> (f64, f64);

    /// Square root, when it exists in the field.
    fn try_sqrt(&self) -> Option<Self>;
    fn try_exp(&self) -> Option<Self>;
    fn try_sin(&self) -> Option<Self>;
    fn try_cos(&self) -> Option<Self>;

    /// Zero test used by elimination. Exact fields ignore `scale`.
    fn is_negligible(&self, scale: f64, rel_tol: f64) -> bool {
        let _ = (scale, rel_tol);
        self.is_zero()
    }

    /// Magnitude used to scale float tolerances.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn cmp_to(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum()
    }

    fn mul_i64(&self, k: i64) -> Self {
        self.clone() * Self::from_i64(k)
    }

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    /// Rational value if the element lies in the prime field.
    fn to_rational(&self) -> Option<BigRational>;

    /// Mode-tagged copy.
    fn to_scalar(&self) -> Scalar;
    /// Reads a JSON matrix entry; `d` is the radicand of the quadratic mode.
    fn from_json(v: &Value, d: u64) -> Result<Self>;

    /// Whether two values can be combined without leaving a single field.
    fn compatible(&self, other: &Self) -> bool {
        let _ = other;
        true
    }
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

/// Converts a rational to `f64`, with an absolute error bound.
pub fn rational_approx(r: &BigRational) -> (f64, f64) {
    match ToPrimitive::to_f64(r) {
        Some(v) if v.is_finite() => (v, 4.0 * F64_EPS * v.abs() + f64::MIN_POSITIVE),
        _ => (f64::NAN, f64::INFINITY),
    }
}

impl Field for BigRational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn signum(&self) -> Ordering {
        if Zero::is_zero(self) {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn approx(&self) -> (f64, f64) {
        rational_approx(self)
    }
    fn try_sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn try_exp(&self) -> Option<Self> {
        Zero::is_zero(self).then(One::one)
    }
    fn try_sin(&self) -> Option<Self> {
        Zero::is_zero(self).then(Zero::zero)
    }
    fn try_cos(&self) -> Option<Self> {
        Zero::is_zero(self).then(One::one)
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Rational(self.clone())
    }
    fn from_json(v: &Value, _d: u64) -> Result<Self> {
        rational_json(v)
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn signum(&self) -> Ordering {
        self.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn approx(&self) -> (f64, f64) {
        (*self, 0.0)
    }
    fn try_sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
    fn try_exp(&self) -> Option<Self> {
        Some(self.exp())
    }
    fn try_sin(&self) -> Option<Self> {
        Some(self.sin())
    }
    fn try_cos(&self) -> Option<Self> {
        Some(self.cos())
    }
    fn is_negligible(&self, scale: f64, rel_tol: f64) -> bool {
        f64::abs(*self) <= rel_tol * scale
    }
    fn to_rational(&self) -> Option<BigRational> {
        None
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Float(*self)
    }
    fn from_json(v: &Value, d: u64) -> Result<Self> {
        float_json(v, d)
    }
}
