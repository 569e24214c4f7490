//! Exact elements `a + b·√d` of a real quadratic field.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use super::field::{rational_approx, rational_sqrt, Field, F64_EPS};

/// `a + b·√d` with `a, b` rational and `d > 1` square-free.
///
/// Values with `b = 0` carry `d = 0` unless they were produced inside a
/// specific field; they combine with any `d`. Combining two values with
/// different nonzero `d` is a logic error and panics.
#[derive(Clone, Debug)]
pub struct QuadraticNumber {
    a: BigRational,
    b: BigRational,
    d: u64,
}

/// Returns `true` when `d > 1` has no square factor.
pub fn is_squarefree(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= d {
        if d.is_multiple_of(p * p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Splits `n > 0` as `s² · m` with `m` square-free (m = 1 allowed).
fn split_square(n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        while m.is_multiple_of(p * p) {
            m /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, m)
}

impl QuadraticNumber {
    /// `a + b√d`. Panics if `b ≠ 0` and `d` is not square-free.
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Self {
        if b.is_zero() {
            return Self { a, b, d: if is_squarefree(d) { d } else { 0 } };
        }
        assert!(is_squarefree(d), "radicand {d} must be square-free and > 1");
        Self { a, b, d }
    }

    pub fn rational(a: BigRational) -> Self {
        Self { a, b: BigRational::zero(), d: 0 }
    }

    /// The element `√d` itself.
    pub fn sqrt_of(d: u64) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), d)
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }
    pub fn b(&self) -> &BigRational {
        &self.b
    }
    /// Radicand, or 0 when the value is rational and not tied to a field.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// The Galois conjugate `a − b√d`.
    pub fn conjugate(&self) -> Self {
        Self { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// The norm `a² − d·b²`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d))
    }

    fn joint_d(&self, other: &Self) -> u64 {
        match (self.d, other.d) {
            (0, d) | (d, 0) => d,
            (d1, d2) if d1 == d2 => d1,
            (d1, d2) => {
                if self.b.is_zero() {
                    d2
                } else if other.b.is_zero() {
                    d1
                } else {
                    panic!("cannot combine elements of Q(sqrt {d1}) and Q(sqrt {d2})")
                }
            }
        }
    }

    fn normalized(a: BigRational, b: BigRational, d: u64) -> Self {
        Self { a, b, d }
    }
}

impl PartialEq for QuadraticNumber {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.d == other.d)
    }
}

impl From<BigRational> for QuadraticNumber {
    fn from(a: BigRational) -> Self {
        Self::rational(a)
    }
}

impl Add for QuadraticNumber {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let d = self.joint_d(&o);
        Self::normalized(self.a + o.a, self.b + o.b, d)
    }
}

impl Sub for QuadraticNumber {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let d = self.joint_d(&o);
        Self::normalized(self.a - o.a, self.b - o.b, d)
    }
}

impl Neg for QuadraticNumber {
    type Output = Self;
    fn neg(self) -> Self {
        Self::normalized(-self.a, -self.b, self.d)
    }
}

impl Mul for QuadraticNumber {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let d = self.joint_d(&o);
        if self.b.is_zero() {
            return Self::normalized(&self.a * &o.a, &self.a * &o.b, d);
        }
        if o.b.is_zero() {
            return Self::normalized(&self.a * &o.a, &self.b * &o.a, d);
        }
        let dd = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &o.a + &self.b * &o.b * dd;
        let b = &self.a * &o.b + &self.b * &o.a;
        Self::normalized(a, b, d)
    }
}

impl Div for QuadraticNumber {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = self.joint_d(&o);
        if o.b.is_zero() {
            assert!(!o.a.is_zero(), "division by zero");
            return Self::normalized(&self.a / &o.a, &self.b / &o.a, d);
        }
        let n = o.norm();
        let num = self * o.conjugate();
        Self::normalized(num.a / &n, num.b / &n, d)
    }
}

impl Field for QuadraticNumber {
    const EXACT: bool = true;
    const MODE: &'static str = "quadratic";

    fn zero() -> Self {
        Self::rational(BigRational::zero())
    }
    fn one() -> Self {
        Self::rational(BigRational::one())
    }
    fn from_i64(v: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(v)))
    }
    fn from_bigint(v: &BigInt) -> Self {
        Self::rational(BigRational::from_integer(v.clone()))
    }
    fn from_rational(r: &BigRational) -> Self {
        Self::rational(r.clone())
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
    fn signum(&self) -> Ordering {
        let sa = Field::signum(&self.a);
        let sb = Field::signum(&self.b);
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        // opposite signs: compare a² with d·b²
        let lhs = &self.a * &self.a;
        let rhs = &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d));
        match lhs.cmp(&rhs) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }
    fn to_f64(&self) -> f64 {
        self.approx().0
    }
    fn approx(&self) -> (f64, f64) {
        let (a, ea) = rational_approx(&self.a);
        if self.b.is_zero() {
            return (a, ea);
        }
        let (b, eb) = rational_approx(&self.b);
        let r = (self.d as f64).sqrt();
        let v = a + b * r;
        let err = ea + eb * r + 4.0 * F64_EPS * (a.abs() + b.abs() * r) + f64::MIN_POSITIVE;
        (v, err)
    }
    fn try_sqrt(&self) -> Option<Self> {
        if self.signum() == Ordering::Less {
            return None;
        }
        if self.b.is_zero() {
            if let Some(s) = rational_sqrt(&self.a) {
                return Some(Self { a: s, b: BigRational::zero(), d: self.d });
            }
            // a = (p/q) = p·q / q²; write p·q = s²·m
            let pq = self.a.numer() * self.a.denom();
            let pq: u64 = num_traits::ToPrimitive::to_u64(&pq)?;
            let (s, m) = split_square(pq);
            if self.d != 0 && m != self.d {
                return None;
            }
            let coef = BigRational::new(BigInt::from(s), self.a.denom().clone());
            return Some(Self::new(BigRational::zero(), coef, m));
        }
        // (x + y√d)² = a + b√d  ⇔  x² + d y² = a, 2xy = b.
        // x² is a root of X² − aX + d b²/4 = 0.
        let dd = BigRational::from_integer(BigInt::from(self.d));
        let disc = &self.a * &self.a - &self.b * &self.b * &dd;
        let sdisc = rational_sqrt(&disc)?;
        let two = BigRational::from_integer(BigInt::from(2));
        for x2 in [(&self.a + &sdisc) / &two, (&self.a - &sdisc) / &two] {
            if let Some(x) = rational_sqrt(&x2) {
                if x.is_zero() {
                    continue;
                }
                let y = &self.b / (&two * &x);
                let cand = Self::normalized(x, y, self.d);
                if cand.clone() * cand.clone() == *self {
                    return Some(if Field::signum(&cand) == Ordering::Less { -cand } else { cand });
                }
            }
        }
        None
    }
    fn try_exp(&self) -> Option<Self> {
        self.is_zero().then(Self::one)
    }
    fn try_sin(&self) -> Option<Self> {
        self.is_zero().then(Self::zero)
    }
    fn try_cos(&self) -> Option<Self> {
        self.is_zero().then(Self::one)
    }
    fn magnitude(&self) -> f64 {
        let r = (self.d as f64).sqrt();
        Field::to_f64(&self.a).abs() + Field::to_f64(&self.b).abs() * r
    }
    fn to_rational(&self) -> Option<BigRational> {
        self.b.is_zero().then(|| self.a.clone())
    }
    fn to_scalar(&self) -> super::Scalar {
        super::Scalar::Quadratic(self.clone())
    }
    fn from_json(v: &serde_json::Value, d: u64) -> crate::error::Result<Self> {
        super::scalar::quadratic_json(v, d)
    }
    fn compatible(&self, other: &Self) -> bool {
        self.b.is_zero() || other.b.is_zero() || self.d == other.d
    }
}

fn sqrt_term(b: &BigRational, d: u64) -> String {
    if *b == BigRational::from_integer(BigInt::from(1)) {
        format!("sqrt({d})")
    } else {
        format!("{b}*sqrt({d})")
    }
}

impl fmt::Display for QuadraticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let mag = Signed::abs(&self.b);
        if self.a.is_zero() {
            let sign = if self.b.is_negative() { "-" } else { "" };
            return write!(f, "{sign}{}", sqrt_term(&mag, self.d));
        }
        let sign = if self.b.is_negative() { '-' } else { '+' };
        write!(f, "{} {} {}", self.a, sign, sqrt_term(&mag, self.d))
    }
}
