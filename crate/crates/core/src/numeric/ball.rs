//! Midpoint-radius ("ball") arithmetic on `f64`.
//!
//! Every operation widens the radius by a bound on its own rounding error,
//! so the exact result of the corresponding real operation on any members of
//! the input balls lies in the output ball. This is used to certify signs
//! cheaply and fall back to exact arithmetic only when a ball straddles 0.

use std::ops::{Add, Mul, Neg, Sub};

use crate::exactlin::Field;

const U: f64 = f64::EPSILON;

#[inline]
fn slack(m: f64) -> f64 {
    U * m.abs() + f64::MIN_POSITIVE
}

#[inline]
fn widen(r: f64, ops: f64) -> f64 {
    r * (1.0 + ops * U)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub mid: f64,
    pub rad: f64,
}

impl Ball {
    pub const ZERO: Ball = Ball { mid: 0.0, rad: 0.0 };

    pub fn new(mid: f64, rad: f64) -> Self {
        Self { mid, rad: rad.abs() }
    }

    /// A float known to be exact (small integers, dyadic values).
    pub fn exact(x: f64) -> Self {
        Self { mid: x, rad: 0.0 }
    }

    /// Encloses an element of a field using its own error estimate.
    pub fn of<F: Field>(x: &F) -> Self {
        let (m, e) = x.approx();
        Self { mid: m, rad: e }
    }

    /// Encloses a value that was computed in `f64` by a few rounded operations.
    pub fn approx(x: f64) -> Self {
        Self { mid: x, rad: 8.0 * slack(x) }
    }

    pub fn lo(&self) -> f64 {
        self.mid - self.rad - slack(self.mid)
    }
    pub fn hi(&self) -> f64 {
        self.mid + self.rad + slack(self.mid)
    }
    pub fn is_positive(&self) -> bool {
        self.lo() > 0.0
    }
    pub fn is_negative(&self) -> bool {
        self.hi() < 0.0
    }
    pub fn is_finite(&self) -> bool {
        self.mid.is_finite() && self.rad.is_finite()
    }
    /// Largest absolute value of a member.
    pub fn mag(&self) -> f64 {
        widen(self.mid.abs() + self.rad, 2.0)
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    /// Square root of the nonnegative part of the ball.
    pub fn sqrt(self) -> Self {
        let lo = self.lo().max(0.0);
        let hi = self.hi().max(0.0);
        let a = lo.sqrt() * (1.0 - 2.0 * U);
        let b = hi.sqrt() * (1.0 + 2.0 * U);
        Self { mid: 0.5 * (a + b), rad: widen(0.5 * (b - a), 4.0) + slack(b) }
    }

    pub fn abs(self) -> Self {
        if self.lo() >= 0.0 {
            self
        } else if self.hi() <= 0.0 {
            -self
        } else {
            let h = self.mag();
            Self { mid: 0.5 * h, rad: 0.5 * h * (1.0 + 2.0 * U) }
        }
    }

    /// `1 / self`; the ball must exclude 0.
    pub fn recip(self) -> Option<Self> {
        if !(self.is_positive() || self.is_negative()) {
            return None;
        }
        // 1/x is decreasing on either sign branch
        let (lo, hi) = (self.lo(), self.hi());
        let a = 1.0 / hi;
        let b = 1.0 / lo;
        let a = a - 2.0 * slack(a);
        let b = b + 2.0 * slack(b);
        Some(Self { mid: 0.5 * (a + b), rad: widen(0.5 * (b - a), 4.0) + slack(b) })
    }

    pub fn div(self, other: Self) -> Option<Self> {
        Some(self * other.recip()?)
    }

    /// Smallest ball containing both.
    pub fn hull(self, other: Self) -> Self {
        let lo = self.lo().min(other.lo());
        let hi = self.hi().max(other.hi());
        Self { mid: 0.5 * (lo + hi), rad: widen(0.5 * (hi - lo), 4.0) + slack(hi) + slack(lo) }
    }

    pub fn from_interval(lo: f64, hi: f64) -> Self {
        Self::exact(lo).hull(Self::exact(hi))
    }
}

impl Add for Ball {
    type Output = Ball;
    fn add(self, o: Ball) -> Ball {
        let mid = self.mid + o.mid;
        Ball { mid, rad: widen(self.rad + o.rad, 2.0) + slack(mid) }
    }
}

impl Sub for Ball {
    type Output = Ball;
    fn sub(self, o: Ball) -> Ball {
        let mid = self.mid - o.mid;
        Ball { mid, rad: widen(self.rad + o.rad, 2.0) + slack(mid) }
    }
}

impl Neg for Ball {
    type Output = Ball;
    fn neg(self) -> Ball {
        Ball { mid: -self.mid, rad: self.rad }
    }
}

impl Mul for Ball {
    type Output = Ball;
    fn mul(self, o: Ball) -> Ball {
        let mid = self.mid * o.mid;
        let r = self.mid.abs() * o.rad + o.mid.abs() * self.rad + self.rad * o.rad;
        Ball { mid, rad: widen(r, 4.0) + slack(mid) }
    }
}

/// Univariate polynomial with ball coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoly {
    pub coef: Vec<Ball>,
}

impl BallPoly {
    pub fn constant(c: Ball) -> Self {
        Self { coef: vec![c] }
    }

    pub fn linear(c0: Ball, c1: Ball) -> Self {
        Self { coef: vec![c0, c1] }
    }

    pub fn degree(&self) -> usize {
        self.coef.len().saturating_sub(1)
    }

    pub fn scale(&self, k: Ball) -> Self {
        Self { coef: self.coef.iter().map(|&c| c * k).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coef.len().max(o.coef.len());
        let coef = (0..n)
            .map(|i| {
                let a = self.coef.get(i).copied().unwrap_or(Ball::ZERO);
                let b = o.coef.get(i).copied().unwrap_or(Ball::ZERO);
                a + b
            })
            .collect();
        Self { coef }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(Ball::exact(-1.0)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.coef.is_empty() || o.coef.is_empty() {
            return Self { coef: vec![] };
        }
        let mut coef = vec![Ball::ZERO; self.coef.len() + o.coef.len() - 1];
        for (i, &a) in self.coef.iter().enumerate() {
            for (j, &b) in o.coef.iter().enumerate() {
                coef[i + j] = coef[i + j] + a * b;
            }
        }
        Self { coef }
    }

    /// Value at an exactly representable `s`.
    pub fn eval(&self, s: f64) -> Ball {
        let x = Ball::exact(s);
        let mut acc = Ball::ZERO;
        for &c in self.coef.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Enclosure of the values on `[lo, hi]` (centered Taylor form).
    pub fn range(&self, lo: f64, hi: f64) -> Ball {
        if self.coef.is_empty() {
            return Ball::ZERO;
        }
        let m = 0.5 * (lo + hi);
        let h = (0.5 * (hi - lo)) * (1.0 + 2.0 * U);
        let mut a = self.coef.clone();
        let d = a.len() - 1;
        let mb = Ball::exact(m);
        for k in 0..d {
            for i in (k..d).rev() {
                a[i] = a[i] + mb * a[i + 1];
            }
        }
        let mut spread = 0.0;
        let mut hk = 1.0;
        for c in &a[1..] {
            hk = widen(hk * h, 2.0);
            spread += widen(c.mag() * hk, 2.0);
        }
        let spread = widen(spread, 2.0 * d as f64 + 2.0);
        Ball { mid: a[0].mid, rad: a[0].rad + spread + slack(a[0].mid) }
    }
}

/// Affine form `c0 + Σ coef_i · x_i` with ball coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearBall {
    pub coef: Vec<Ball>,
    pub c0: Ball,
}

impl LinearBall {
    pub fn new(coef: Vec<Ball>, c0: Ball) -> Self {
        Self { coef, c0 }
    }

    pub fn from_field<F: Field>(coef: &[F], c0: &F) -> Self {
        Self { coef: coef.iter().map(Ball::of).collect(), c0: Ball::of(c0) }
    }

    pub fn scale(&self, k: Ball) -> Self {
        Self { coef: self.coef.iter().map(|&c| c * k).collect(), c0: self.c0 * k }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { coef: self.coef.iter().zip(&o.coef).map(|(&a, &b)| a + b).collect(), c0: self.c0 + o.c0 }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(Ball::exact(-1.0)))
    }

    /// Value at an integer point.
    pub fn eval_int(&self, x: &[i64]) -> Ball {
        let mut acc = self.c0;
        for (c, &xi) in self.coef.iter().zip(x) {
            if xi != 0 {
                acc = acc + *c * Ball::exact(xi as f64);
            }
        }
        acc
    }

    /// Enclosure of the values on the box `∏ [lo_i, hi_i]`.
    pub fn range(&self, lo: &[f64], hi: &[f64]) -> Ball {
        let mut acc = self.c0;
        for ((c, &a), &b) in self.coef.iter().zip(lo).zip(hi) {
            if c.mid == 0.0 && c.rad == 0.0 {
                continue;
            }
            acc = acc + *c * Ball::from_interval(a, b);
        }
        acc
    }

    /// Restriction to the line `base + s·e_k` as a polynomial in `s`.
    pub fn on_line(&self, base: &[i64], k: usize) -> BallPoly {
        let c0 = self.eval_int(base) - self.coef[k] * Ball::exact(base[k] as f64);
        BallPoly::linear(c0, self.coef[k])
    }
}
