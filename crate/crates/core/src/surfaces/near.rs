//! Rational points close to a surface: counts against the volume heuristic
//! and the normalised minimal distance `δ_𝓜(Q)`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::expr::{Expr, Num};
use super::jet::{Jet, JetShape};
use super::monge::MongeSurface;
use crate::error::{Error, Result};
use crate::exactlin::{Field, QuadraticNumber, Scalar};
use crate::numeric::{gauss_legendre, gcd_i64, zeta, Ball};
use crate::report::CountReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// `|p/q − F(x)|`.
    Vertical,
    /// Distance to the graph over the domain.
    Euclidean,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(Self::Vertical),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(Error::InvalidInput(format!("unknown distance mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NearOptions {
    /// Guard on the estimated number of columns and candidates visited.
    pub max_work: f64,
    /// Nodes per axis for the surface-area quadrature.
    pub area_nodes: usize,
}

impl Default for NearOptions {
    fn default() -> Self {
        Self { max_work: 2e9, area_nodes: 64 }
    }
}

/// `F(x) = √(r² − |x − c|²)`, recognised exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Hemisphere {
    pub center: Vec<BigRational>,
    pub radius_sq: BigRational,
}

fn degree_bound(e: &Expr) -> Option<usize> {
    Some(match e {
        Expr::Const(_) => 0,
        Expr::Var(_) => 1,
        Expr::Neg(a) => degree_bound(a)?,
        Expr::Add(a, b) | Expr::Sub(a, b) => degree_bound(a)?.max(degree_bound(b)?),
        Expr::Mul(a, b) => degree_bound(a)? + degree_bound(b)?,
        Expr::Div(a, b) if matches!(**b, Expr::Const(_)) => degree_bound(a)?,
        Expr::Pow(a, k) if *k >= 0 => degree_bound(a)? * *k as usize,
        _ => return None,
    })
}

/// Whether the graph is contained in a quadric with rational coefficients
/// that the parser can recognise: a polynomial of degree at most two or a
/// rational hemisphere.
pub fn is_rational_quadric(s: &MongeSurface) -> bool {
    degree_bound(s.expr()).is_some_and(|d| d <= 2) || detect_hemisphere(s).is_some()
}

/// Detects `F = sqrt(E)` with `E` a quadratic polynomial whose Hessian is `−2I`.
pub fn detect_hemisphere(s: &MongeSurface) -> Option<Hemisphere> {
    let Expr::Sqrt(inner) = s.expr() else { return None };
    let deg = degree_bound(inner)?;
    if deg > 16 {
        return None;
    }
    let m = s.domain().len();
    let zero = BigRational::from_integer(0.into());
    let one = BigRational::from_integer(1.into());
    let shape = JetShape::new(m, deg.max(2));
    let vars = (0..m)
        .map(|j| {
            let dir: Vec<BigRational> = (0..m).map(|i| if i == j { one.clone() } else { zero.clone() }).collect();
            Jet::affine(&shape, zero.clone(), &dir)
        })
        .collect::<Option<Vec<_>>>()?;
    let e = inner.eval(&vars)?;
    let mut center = vec![zero.clone(); m];
    for (k, exp) in shape.exponents().iter().enumerate() {
        let c = &e.coeffs()[k];
        let d: usize = exp.iter().map(|&v| v as usize).sum();
        match d {
            0 => {}
            1 => {
                let j = exp.iter().position(|&v| v == 1).expect("degree one");
                center[j] = c / BigRational::from_integer(2.into());
            }
            2 => {
                let square = exp.contains(&2);
                let want = if square { -one.clone() } else { zero.clone() };
                if *c != want {
                    return None;
                }
            }
            _ if !Field::is_zero(c) => return None,
            _ => {}
        }
    }
    let radius_sq = e.coeffs()[0].clone() + center.iter().map(|c| c * c).sum::<BigRational>();
    (radius_sq > zero).then_some(Hemisphere { center, radius_sq })
}

/// Expression tree with constants pre-rounded to balls.
enum BallNode {
    Const(Ball),
    Var(usize),
    Neg(Box<BallNode>),
    Bin(u8, Box<BallNode>, Box<BallNode>),
    Pow(Box<BallNode>, i32),
    Un(u8, Box<BallNode>),
}

impl BallNode {
    fn compile(e: &Expr) -> Self {
        let b = |x: &Expr| Box::new(Self::compile(x));
        match e {
            Expr::Const(c) => BallNode::Const(Ball::of(c)),
            Expr::Var(i) => BallNode::Var(*i),
            Expr::Neg(a) => BallNode::Neg(b(a)),
            Expr::Add(x, y) => BallNode::Bin(0, b(x), b(y)),
            Expr::Sub(x, y) => BallNode::Bin(1, b(x), b(y)),
            Expr::Mul(x, y) => BallNode::Bin(2, b(x), b(y)),
            Expr::Div(x, y) => BallNode::Bin(3, b(x), b(y)),
            Expr::Pow(a, k) => BallNode::Pow(b(a), *k),
            Expr::Sqrt(a) => BallNode::Un(0, b(a)),
            Expr::Exp(a) => BallNode::Un(1, b(a)),
            Expr::Sin(a) => BallNode::Un(2, b(a)),
            Expr::Cos(a) => BallNode::Un(3, b(a)),
        }
    }

    fn eval(&self, x: &[Ball]) -> Option<Ball> {
        Some(match self {
            BallNode::Const(c) => *c,
            BallNode::Var(i) => x[*i],
            BallNode::Neg(a) => -a.eval(x)?,
            BallNode::Bin(op, a, b) => {
                let (u, v) = (a.eval(x)?, b.eval(x)?);
                match op {
                    0 => u + v,
                    1 => u - v,
                    2 => u * v,
                    _ => Ball::div(u, v)?,
                }
            }
            BallNode::Pow(a, k) => Num::powi(&a.eval(x)?, *k)?,
            BallNode::Un(op, a) => {
                let u = a.eval(x)?;
                match op {
                    0 => Num::sqrt(&u)?,
                    1 => Num::exp(&u)?,
                    2 => Num::sin(&u)?,
                    _ => Num::cos(&u)?,
                }
            }
        })
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact comparison `|p/q − F(a/q)| ≤ ε`; `None` when `F(a/q)` leaves `ℚ(√d)`.
fn exact_vertical(expr: &Expr, a: &[i64], q: i64, p: i64, eps: &BigRational) -> Option<bool> {
    let xs: Vec<BigRational> = a.iter().map(|&v| rat(v, q)).collect();
    let y = rat(p, q);
    if let Some(f) = expr.eval(&xs) {
        return Some(Signed::abs(&(y - f)) <= *eps);
    }
    let xq: Vec<QuadraticNumber> = xs.into_iter().map(QuadraticNumber::rational).collect();
    let f: QuadraticNumber = expr.eval(&xq)?;
    let diff = QuadraticNumber::rational(y) - f;
    let e = QuadraticNumber::rational(eps.clone());
    Some(
        (e.clone() - diff.clone()).signum() != std::cmp::Ordering::Less
            && (e + diff).signum() != std::cmp::Ordering::Less,
    )
}

/// Forward-mode value and gradient in up to nine variables.
#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    g: [f64; 9],
}

impl Dual {
    fn konst(v: f64) -> Self {
        Self { v, g: [0.0; 9] }
    }
    // f(self) with f′(self.v) = d
    fn chain(self, v: f64, d: f64) -> Self {
        let mut g = self.g;
        g.iter_mut().for_each(|x| *x *= d);
        Self { v, g }
    }
    fn lin(self, a: f64, o: Self, b: f64, v: f64) -> Self {
        let mut g = [0.0; 9];
        for k in 0..9 {
            g[k] = a * self.g[k] + b * o.g[k];
        }
        Self { v, g }
    }
}

impl BallNode {
    fn dual(&self, x: &[Dual]) -> Option<Dual> {
        Some(match self {
            BallNode::Const(c) => Dual::konst(c.mid),
            BallNode::Var(i) => x[*i],
            BallNode::Neg(a) => {
                let u = a.dual(x)?;
                u.chain(-u.v, -1.0)
            }
            BallNode::Bin(op, a, b) => {
                let (u, w) = (a.dual(x)?, b.dual(x)?);
                match op {
                    0 => u.lin(1.0, w, 1.0, u.v + w.v),
                    1 => u.lin(1.0, w, -1.0, u.v - w.v),
                    2 => u.lin(w.v, w, u.v, u.v * w.v),
                    _ => {
                        if w.v == 0.0 {
                            return None;
                        }
                        let q = u.v / w.v;
                        u.lin(1.0 / w.v, w, -q / w.v, q)
                    }
                }
            }
            BallNode::Pow(a, k) => {
                let u = a.dual(x)?;
                if *k < 0 && u.v == 0.0 {
                    return None;
                }
                u.chain(u.v.powi(*k), *k as f64 * u.v.powi(*k - 1))
            }
            BallNode::Un(op, a) => {
                let u = a.dual(x)?;
                match op {
                    0 => {
                        if u.v <= 0.0 {
                            return None;
                        }
                        let r = u.v.sqrt();
                        u.chain(r, 0.5 / r)
                    }
                    1 => {
                        let e = u.v.exp();
                        u.chain(e, e)
                    }
                    2 => u.chain(u.v.sin(), u.v.cos()),
                    _ => u.chain(u.v.cos(), -u.v.sin()),
                }
            }
        })
    }

    /// Value and gradient of `F` at `x` in `f64`.
    fn value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let m = x.len();
        let xs: Vec<Dual> = (0..m)
            .map(|i| {
                let mut d = Dual::konst(x[i]);
                d.g[i] = 1.0;
                d
            })
            .collect();
        let d = self.dual(&xs)?;
        (d.v.is_finite() && d.g[..m].iter().all(|v| v.is_finite())).then(|| (d.v, d.g[..m].to_vec()))
    }

    /// Distance from `(x, y)` to the graph using one linearised foot-point
    /// step followed by the tangent-plane distance at the refined foot.
    fn tangent_distance(&self, x: &[f64], y: f64, at_x: Option<&(f64, Vec<f64>)>) -> Option<f64> {
        let own;
        let (f0, g0) = match at_x {
            Some(v) => v,
            None => {
                own = self.value_grad(x)?;
                &own
            }
        };
        let n0: f64 = 1.0 + g0.iter().map(|g| g * g).sum::<f64>();
        let r0 = y - f0;
        let foot: Vec<f64> = x.iter().zip(g0).map(|(xi, gi)| xi + r0 * gi / n0).collect();
        let (f1, g1) = self.value_grad(&foot)?;
        let n1: f64 = 1.0 + g1.iter().map(|g| g * g).sum::<f64>();
        let lin: f64 = g1.iter().zip(x.iter().zip(&foot)).map(|(g, (xi, fi))| g * (xi - fi)).sum();
        Some((y - f1 - lin).abs() / n1.sqrt())
    }
}

/// `∫_B √(1 + |∇F|²)`, with the difference to a half-resolution rule.
pub fn surface_volume(s: &MongeSurface, nodes: usize) -> Result<(f64, f64)> {
    let m = s.domain().len();
    let per_axis = match m {
        1 | 2 => nodes,
        3 => nodes.min(16),
        _ => nodes.min(6),
    };
    let fine = tensor_area(s, per_axis)?;
    let coarse = tensor_area(s, (per_axis / 2).max(2))?;
    Ok((fine, (fine - coarse).abs()))
}

fn tensor_area(s: &MongeSurface, k: usize) -> Result<f64> {
    let dom = s.domain_f64();
    let m = dom.len();
    let node = BallNode::compile(s.expr());
    // two Gauss–Legendre panels per axis
    let (nodes, weights) = gauss_legendre(k);
    let axis_rules: Vec<Vec<(f64, f64)>> = dom
        .iter()
        .map(|&(lo, hi)| {
            let h = (hi - lo) / 2.0;
            let mut r = Vec::with_capacity(2 * k);
            for p in 0..2 {
                let a = lo + p as f64 * h;
                for (t, w) in nodes.iter().zip(&weights) {
                    r.push((a + h * (t + 1.0) / 2.0, w * h / 2.0));
                }
            }
            r
        })
        .collect();
    let mut idx = vec![0usize; m];
    let mut total = 0.0;
    let mut x = vec![0.0; m];
    loop {
        let mut w = 1.0;
        for j in 0..m {
            x[j] = axis_rules[j][idx[j]].0;
            w *= axis_rules[j][idx[j]].1;
        }
        let (_, g) = node.value_grad(&x).ok_or_else(|| Error::JetUnavailable(format!("{} inside the domain", s.text())))?;
        total += w * (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let mut j = 0;
        loop {
            if j == m {
                return Ok(total);
            }
            idx[j] += 1;
            if idx[j] < axis_rules[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Integer ranges `⌈q·lo⌉ ≤ a < ⌈q·hi⌉` per axis.
fn column_ranges(s: &MongeSurface, q: i64) -> Vec<(i64, i64)> {
    s.domain()
        .iter()
        .map(|(lo, hi)| {
            let qq = BigRational::from_integer(q.into());
            let a = (lo * &qq).ceil().to_integer().to_i64().unwrap_or(i64::MIN / 4);
            let b = (hi * &qq).ceil().to_integer().to_i64().unwrap_or(i64::MAX / 4);
            (a, b)
        })
        .collect()
}

/// Calls `f` on every `a` in the product of half-open ranges.
fn for_each_column(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|(a, b)| a >= b) {
        return;
    }
    let mut a: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&a);
        let mut j = 0;
        loop {
            if j == a.len() {
                return;
            }
            a[j] += 1;
            if a[j] < ranges[j].1 {
                break;
            }
            a[j] = ranges[j].0;
            j += 1;
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    count: u64,
    exact_checks: u64,
    undecided: u64,
    skipped: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            count: self.count + o.count,
            exact_checks: self.exact_checks + o.exact_checks,
            undecided: self.undecided + o.undecided,
            skipped: self.skipped + o.skipped,
        }
    }
}

struct Ctx<'a> {
    s: &'a MongeSurface,
    ball: BallNode,
    sphere: Option<Hemisphere>,
    sphere_f64: Option<(Vec<f64>, f64)>,
    dom: Vec<(f64, f64)>,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a MongeSurface) -> Self {
        let sphere = detect_hemisphere(s);
        let sphere_f64 = sphere.as_ref().map(|h| {
            (h.center.iter().map(|c| ToPrimitive::to_f64(c).unwrap_or(f64::NAN)).collect(), ToPrimitive::to_f64(&h.radius_sq).unwrap_or(f64::NAN).sqrt())
        });
        Self { s, ball: BallNode::compile(s.expr()), sphere, sphere_f64, dom: s.domain_f64() }
    }

    fn xs_f64(a: &[i64], q: i64) -> Vec<f64> {
        a.iter().map(|&v| v as f64 / q as f64).collect()
    }

    /// Radial foot point lies over the domain with a positive last coordinate.
    fn radial_foot_inside(&self, x: &[f64], y: f64) -> bool {
        let (c, r) = self.sphere_f64.as_ref().expect("sphere");
        let nn: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() + y * y;
        let scale = r / nn.sqrt();
        y > 0.0
            && x.iter().zip(c).zip(&self.dom).all(|((xi, ci), (lo, hi))| {
                let f = ci + (xi - ci) * scale;
                f >= lo + 1e-12 && f < hi - 1e-12
            })
    }

    /// `N = |x − c|² + y²` as a rational.
    fn sphere_norm(&self, a: &[i64], q: i64, p: i64) -> BigRational {
        let h = self.sphere.as_ref().expect("sphere");
        let mut nn = rat(p, q) * rat(p, q);
        for (v, c) in a.iter().zip(&h.center) {
            let d = rat(*v, q) - c;
            nn += &d * &d;
        }
        nn
    }

    fn vertical_column(&self, a: &[i64], q: i64, eps: &BigRational, eps_ball: Ball) -> Tally {
        let mut t = Tally::default();
        let qb = Ball::exact(q as f64);
        let xs: Option<Vec<Ball>> = a.iter().map(|&v| Ball::div(Ball::exact(v as f64), qb)).collect();
        let y = xs.and_then(|xs| self.ball.eval(&xs));
        let qe = qb * eps_ball;
        let g = a.iter().fold(q, |g, &v| gcd_i64(g, v));
        match y {
            Some(y) => {
                let qy = qb * y;
                let p_lo = (qy.lo() - qe.hi()).floor() as i64;
                let p_hi = (qy.hi() + qe.hi()).ceil() as i64;
                for p in p_lo..=p_hi {
                    let d = (Ball::exact(p as f64) - qy).abs();
                    let inside = if d.hi() < qe.lo() {
                        Some(true)
                    } else if d.lo() > qe.hi() {
                        Some(false)
                    } else {
                        t.exact_checks += 1;
                        exact_vertical(self.s.expr(), a, q, p, eps).or_else(|| {
                            t.undecided += 1;
                            Some(d.mid <= qe.mid)
                        })
                    };
                    if inside == Some(true) && gcd_i64(g, p) == 1 {
                        t.count += 1;
                    }
                }
            }
            None => {
                // enclosure failed (e.g. a square root touching zero): go exact
                let xs: Vec<BigRational> = a.iter().map(|&v| rat(v, q)).collect();
                let xq: Vec<QuadraticNumber> = xs.iter().cloned().map(QuadraticNumber::rational).collect();
                let val: Option<f64> =
                    self.s.expr().eval(&xs).map(|v| Field::to_f64(&v)).or_else(|| self.s.expr().eval(&xq).map(|v| Field::to_f64(&v)));
                let Some(v) = val else {
                    t.skipped += 1;
                    return t;
                };
                let e = Field::to_f64(eps);
                let p_lo = (q as f64 * (v - e)).floor() as i64 - 1;
                let p_hi = (q as f64 * (v + e)).ceil() as i64 + 1;
                for p in p_lo..=p_hi {
                    t.exact_checks += 1;
                    match exact_vertical(self.s.expr(), a, q, p, eps) {
                        Some(true) if gcd_i64(g, p) == 1 => t.count += 1,
                        Some(_) => {}
                        None => t.undecided += 1,
                    }
                }
            }
        }
        t
    }

    /// Candidate `p` values whose radial distance can be at most `w`.
    fn sphere_candidates(&self, x: &[f64], q: i64, w: f64) -> Vec<(i64, i64)> {
        let (c, r) = self.sphere_f64.as_ref().expect("sphere");
        let nx: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
        let outer = (r + w) * (r + w) - nx;
        if outer < 0.0 {
            return Vec::new();
        }
        let y_hi = outer.sqrt();
        let inner = (r - w).max(0.0).powi(2) - nx;
        let y_lo = if inner > 0.0 { inner.sqrt() } else { 0.0 };
        let qf = q as f64;
        let up = ((qf * y_lo).floor() as i64 - 1, (qf * y_hi).ceil() as i64 + 1);
        let down = (-up.1, -up.0);
        if up.0 <= down.1 {
            vec![(down.0, up.1)]
        } else {
            vec![down, up]
        }
    }

    fn euclidean_column(&self, sq: Option<&(BigRational, BigRational)>, a: &[i64], q: i64, eps_f: f64) -> Tally {
        let mut t = Tally::default();
        let x = Self::xs_f64(a, q);
        let g = a.iter().fold(q, |g, &v| gcd_i64(g, v));
        if let Some((shift, four_r2e2)) = sq {
            let (c, r) = self.sphere_f64.as_ref().expect("sphere");
            let r = *r;
            for (lo, hi) in self.sphere_candidates(&x, q, eps_f * (1.0 + 1e-9) + 1e-15) {
                for p in lo..=hi {
                    let y = p as f64 / q as f64;
                    let nn: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() + y * y;
                    let radial = (nn - r * r).abs() / (nn.sqrt() + r);
                    if radial > eps_f * (1.0 + 1e-9) + 1e-15 {
                        continue;
                    }
                    let inside = if self.radial_foot_inside(&x, y) && eps_f < r {
                        t.exact_checks += 1;
                        let d = self.sphere_norm(a, q, p) - shift;
                        &d * &d <= *four_r2e2
                    } else {
                        t.undecided += 1;
                        match self.ball.tangent_distance(&x, y, None) {
                            Some(d) => d <= eps_f,
                            None => {
                                t.skipped += 1;
                                false
                            }
                        }
                    };
                    if inside && gcd_i64(g, p) == 1 {
                        t.count += 1;
                    }
                }
            }
            return t;
        }
        let Some(at_x) = self.ball.value_grad(&x) else {
            t.skipped += 1;
            return t;
        };
        let (f0, g0) = &at_x;
        let slope = (1.0 + g0.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let band = eps_f * slope * (1.0 + 1e-6);
        let qf = q as f64;
        let p_lo = (qf * (f0 - band)).floor() as i64 - 1;
        let p_hi = (qf * (f0 + band)).ceil() as i64 + 1;
        for p in p_lo..=p_hi {
            let y = p as f64 / qf;
            match self.ball.tangent_distance(&x, y, Some(&at_x)) {
                Some(d) if d <= eps_f && gcd_i64(g, p) == 1 => t.count += 1,
                Some(_) => {}
                None => t.skipped += 1,
            }
        }
        t
    }
}

fn check_work(s: &MongeSurface, q_max: u64, eps: f64, opts: &NearOptions) -> Result<()> {
    let m = s.domain().len() as i32;
    let vol = ToPrimitive::to_f64(&s.domain_volume()).unwrap_or(f64::INFINITY);
    let qf = q_max as f64;
    let columns = vol * qf.powi(m + 1) / (m + 1) as f64 + qf;
    let candidates = 2.0 * eps * vol * qf.powi(m + 2) / (m + 2) as f64;
    let work = columns + candidates;
    if work > opts.max_work {
        return Err(Error::RegionTooLarge { points: work, limit: opts.max_work });
    }
    Ok(())
}

/// Counts primitive `(q, a, p)` with `q ≤ Q`, `a/q` in the domain and
/// `(a/q, p/q)` within `ε` of the surface.
pub fn count_rational_near(s: &MongeSurface, q_max: u64, eps: &BigRational, mode: DistanceMode) -> Result<CountReport> {
    count_rational_near_with(s, q_max, eps, mode, &NearOptions::default())
}

pub fn count_rational_near_with(
    s: &MongeSurface,
    q_max: u64,
    eps: &BigRational,
    mode: DistanceMode,
    opts: &NearOptions,
) -> Result<CountReport> {
    if q_max < 1 || eps.is_negative() {
        return Err(Error::InvalidInput("need Q ≥ 1 and ε ≥ 0".into()));
    }
    let eps_f = Field::to_f64(eps);
    check_work(s, q_max, eps_f, opts)?;
    let start = Instant::now();
    let ctx = Ctx::new(s);
    let eps_ball = Ball::of(eps);
    // |N − r² − ε²| ≤ 2rε, squared
    let sphere_eps = ctx.sphere.as_ref().map(|h| {
        (&h.radius_sq + eps * eps, BigRational::from_integer(4.into()) * &h.radius_sq * eps * eps)
    });
    let tally = (1..=q_max as i64)
        .into_par_iter()
        .map(|q| {
            let mut t = Tally::default();
            for_each_column(&column_ranges(s, q), |a| {
                t = t + match mode {
                    DistanceMode::Vertical => ctx.vertical_column(a, q, eps, eps_ball),
                    DistanceMode::Euclidean => ctx.euclidean_column(sphere_eps.as_ref(), a, q, eps_f),
                };
            });
            t
        })
        .reduce(Tally::default, |a, b| a + b);

    let n = s.dim() as i32;
    let z = zeta(n as u32 + 1);
    let area = ToPrimitive::to_f64(&s.domain_volume()).unwrap_or(f64::NAN);
    let cone = |base: f64| 2.0 * eps_f * base * (q_max as f64).powi(n + 1) / (n + 1) as f64;
    let (vol_m, vol_err) = surface_volume(s, opts.area_nodes)?;
    let band_volume = cone(area);
    let arc_volume = cone(vol_m);
    let volume = match mode {
        DistanceMode::Vertical => band_volume,
        DistanceMode::Euclidean => arc_volume,
    };
    let distance = match (mode, ctx.sphere.is_some()) {
        (DistanceMode::Vertical, _) => "vertical",
        (DistanceMode::Euclidean, true) => "sphere-exact",
        (DistanceMode::Euclidean, false) => "tangent-plane",
    };
    let params = json!({
        "expr": s.text(),
        "domain": s.domain().iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect::<Vec<_>>(),
        "Q": q_max,
        "eps": eps.to_string(),
        "mode": mode,
    });
    let mut rep = CountReport::new(tally.count, volume, volume / z, params)
        .with_extra("distance", distance)
        .with_extra("surface_volume", vol_m)
        .with_extra("surface_volume_error", vol_err)
        .with_extra("band_predicted", band_volume / z)
        .with_extra("arc_predicted", arc_volume / z)
        .with_extra("arc_ratio", if arc_volume > 0.0 { tally.count as f64 * z / arc_volume } else { 0.0 })
        .with_extra("exact_checks", tally.exact_checks)
        .with_extra("undecided", tally.undecided)
        .with_extra("skipped", tally.skipped);
    rep.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    Ok(rep)
}

/// Result of [`delta_statistic`].
#[derive(Clone, Debug, Serialize)]
pub struct DeltaResult {
    pub q_max: u64,
    /// `Q² · min dist`.
    pub delta: f64,
    /// The same value in closed form when it lies in `ℚ` or `ℚ(√d)`.
    pub exact: Option<Scalar>,
    pub min_distance: f64,
    /// `(q, a, p)` of the minimiser in lowest terms.
    pub minimizer: Option<(u64, Vec<i64>, i64)>,
    pub on_surface_excluded: u64,
}

/// `Q²` times the smallest distance from a rational point of denominator
/// at most `Q` over the domain to the surface, ignoring points on it.
pub fn delta_statistic(s: &MongeSurface, q_max: u64) -> Result<DeltaResult> {
    if q_max < 1 {
        return Err(Error::InvalidInput("need Q ≥ 1".into()));
    }
    check_work(s, q_max, 1.0 / q_max as f64, &NearOptions::default())?;
    let ctx = Ctx::new(s);
    type Found = (f64, i64, Vec<i64>, i64);
    let per_q: Vec<(Option<Found>, u64)> = (1..=q_max as i64)
        .into_par_iter()
        .map(|q| {
            let mut best: Option<Found> = None;
            let mut on = 0u64;
            for_each_column(&column_ranges(s, q), |a| {
                let g = a.iter().fold(q, |g, &v| gcd_i64(g, v));
                let x = Ctx::xs_f64(a, q);
                let qf = q as f64;
                let ranges: Vec<(i64, i64)> = if ctx.sphere.is_some() {
                    ctx.sphere_candidates(&x, q, 1.0 / qf)
                } else {
                    match ctx.ball.value_grad(&x) {
                        Some((f0, g0)) => {
                            let slope = (1.0 + g0.iter().map(|v| v * v).sum::<f64>()).sqrt();
                            vec![((qf * f0 - slope).floor() as i64 - 1, (qf * f0 + slope).ceil() as i64 + 1)]
                        }
                        None => Vec::new(),
                    }
                };
                for (lo, hi) in ranges {
                    for p in lo..=hi {
                        if gcd_i64(g, p) != 1 {
                            continue;
                        }
                        let y = p as f64 / qf;
                        let dist = if let (Some(h), Some((c, r))) = (&ctx.sphere, &ctx.sphere_f64) {
                            if ctx.radial_foot_inside(&x, y) {
                                let nn = ctx.sphere_norm(a, q, p);
                                if nn == h.radius_sq {
                                    on += 1;
                                    continue;
                                }
                                let nf: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() + y * y;
                                Field::to_f64(&(&nn - &h.radius_sq)).abs() / (nf.sqrt() + r)
                            } else {
                                match ctx.ball.tangent_distance(&x, y, None) {
                                    Some(d) => d,
                                    None => continue,
                                }
                            }
                        } else {
                            if exact_vertical(s.expr(), a, q, p, &rat(0, 1)) == Some(true) {
                                on += 1;
                                continue;
                            }
                            match ctx.ball.tangent_distance(&x, y, None) {
                                Some(d) if d > 0.0 => d,
                                _ => continue,
                            }
                        };
                        let cand = (dist, q, a.to_vec(), p);
                        let better = match &best {
                            None => true,
                            Some(b) => (cand.0, cand.1, &cand.2, cand.3) < (b.0, b.1, &b.2, b.3),
                        };
                        if better {
                            best = Some(cand);
                        }
                    }
                }
            });
            (best, on)
        })
        .collect();
    let on_surface_excluded = per_q.iter().map(|(_, k)| k).sum();
    let best = per_q
        .into_iter()
        .filter_map(|(b, _)| b)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let qq = (q_max as f64).powi(2);
    let Some((dist, q, a, p)) = best else {
        return Ok(DeltaResult { q_max, delta: f64::INFINITY, exact: None, min_distance: f64::INFINITY, minimizer: None, on_surface_excluded });
    };
    let exact = ctx.sphere.as_ref().and_then(|h| {
        let x: Vec<f64> = Ctx::xs_f64(&a, q);
        if !ctx.radial_foot_inside(&x, p as f64 / q as f64) {
            return None;
        }
        let root_n = QuadraticNumber::rational(ctx.sphere_norm(&a, q, p)).try_sqrt()?;
        let r = QuadraticNumber::rational(h.radius_sq.clone()).try_sqrt()?;
        if !root_n.compatible(&r) {
            return None;
        }
        let d = (root_n - r).abs() * QuadraticNumber::rational(BigRational::from_integer(BigInt::from(q_max).pow(2)));
        Some(if d.b().is_zero() { Scalar::Rational(d.a().clone()) } else { Scalar::Quadratic(d) })
    });
    Ok(DeltaResult {
        q_max,
        delta: qq * dist,
        exact,
        min_distance: dist,
        minimizer: Some((q as u64, a, p)),
        on_surface_excluded,
    })
}
