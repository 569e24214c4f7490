//! Hypersurfaces `{(x, F(x)) : x ∈ B}` and their osculating quadrics.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::expr::{Expr, Num};
use super::jet::{Jet, JetShape};
use crate::error::{Error, Result};
use crate::exactlin::{parse_rational, Field, Matrix, DEFAULT_PIVOT_TOL};
use crate::quadforms::QuadraticForm;

/// Tolerance for the orthonormality check on frames.
pub const FRAME_TOL: f64 = 1e-12;

/// A graph over a half-open box `B = Π [lo_i, hi_i)` with a frame used for
/// directional jets.
#[derive(Clone, Debug)]
pub struct MongeSurface {
    text: String,
    expr: Expr,
    domain: Vec<(BigRational, BigRational)>,
    frame: Vec<Vec<BigRational>>,
}

impl MongeSurface {
    pub fn new(text: &str, domain: Vec<(BigRational, BigRational)>) -> Result<Self> {
        let expr = Expr::parse(text)?;
        if domain.is_empty() || domain.len() > 9 {
            return Err(Error::InvalidInput(format!("domain must have 1..=9 axes, found {}", domain.len())));
        }
        if let Some((lo, hi)) = domain.iter().find(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidInput(format!("empty domain interval [{lo}, {hi})")));
        }
        if expr.arity() > domain.len() {
            return Err(Error::InvalidInput(format!(
                "expression uses x{} but the domain has {} axes",
                expr.arity(),
                domain.len()
            )));
        }
        let m = domain.len();
        let frame = (0..m)
            .map(|i| (0..m).map(|j| BigRational::from_integer(((i == j) as i64).into())).collect())
            .collect();
        Ok(Self { text: text.trim().to_string(), expr, domain, frame })
    }

    /// Parses `"lo,hi"` or `"lo1,hi1;lo2,hi2"` into a box.
    pub fn parse_domain(text: &str) -> Result<Vec<(BigRational, BigRational)>> {
        text.split(';')
            .map(|axis| {
                let parts: Vec<&str> = axis.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(Error::InvalidInput(format!("domain axis {axis:?} is not \"lo,hi\"")));
                }
                Ok((parse_rational(parts[0])?, parse_rational(parts[1])?))
            })
            .collect()
    }

    /// Replaces the standard frame by the rows of `frame`.
    pub fn with_frame(mut self, frame: Vec<Vec<BigRational>>) -> Result<Self> {
        let m = self.domain.len();
        if frame.len() != m || frame.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: frame.len() });
        }
        for i in 0..m {
            for j in 0..m {
                let d: f64 = (0..m).map(|k| ToPrimitive::to_f64(&frame[i][k]).unwrap_or(f64::NAN) * ToPrimitive::to_f64(&frame[j][k]).unwrap_or(f64::NAN)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (d - want).abs() > FRAME_TOL || d.is_nan() {
                    return Err(Error::InvalidInput(format!("frame is not orthonormal at ({i},{j})")));
                }
            }
        }
        self.frame = frame;
        Ok(self)
    }

    pub fn text(&self) -> &str {
        &self.text
    }
    pub fn expr(&self) -> &Expr {
        &self.expr
    }
    pub fn domain(&self) -> &[(BigRational, BigRational)] {
        &self.domain
    }
    pub fn frame(&self) -> &[Vec<BigRational>] {
        &self.frame
    }

    /// Ambient dimension `n`; the graph variable is `x_n`.
    pub fn dim(&self) -> usize {
        self.domain.len() + 1
    }

    pub fn domain_volume(&self) -> BigRational {
        self.domain.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn domain_f64(&self) -> Vec<(f64, f64)> {
        self.domain.iter().map(|(lo, hi)| (ToPrimitive::to_f64(lo).unwrap_or(f64::NAN), ToPrimitive::to_f64(hi).unwrap_or(f64::NAN))).collect()
    }

    pub fn contains(&self, x: &[BigRational]) -> bool {
        x.len() == self.domain.len() && x.iter().zip(&self.domain).all(|(v, (lo, hi))| lo <= v && v < hi)
    }

    pub fn eval<T: Num>(&self, x: &[T]) -> Option<T> {
        self.expr.eval(x)
    }

    /// Jet of `u ↦ F(x + Σ u_i·dirs[i])`.
    pub fn jet_along<T: Num>(&self, x: &[T], dirs: &[Vec<T>], order: usize) -> Option<Jet<T>> {
        let shape = JetShape::new(dirs.len(), order);
        self.jet_with_shape(&shape, x, dirs)
    }

    pub(crate) fn jet_with_shape<T: Num>(&self, shape: &Arc<JetShape>, x: &[T], dirs: &[Vec<T>]) -> Option<Jet<T>> {
        let vars = (0..self.domain.len())
            .map(|j| {
                let d: Vec<T> = dirs.iter().map(|e| e[j].clone()).collect();
                Jet::affine(shape, x[j].clone(), &d)
            })
            .collect::<Option<Vec<_>>>()?;
        self.expr.eval(&vars)
    }

    /// Frame rows lifted into the arithmetic of `like`.
    pub fn frame_in<T: Num>(&self, like: &T) -> Option<Vec<Vec<T>>> {
        self.frame.iter().map(|r| r.iter().map(|c| like.lift(c)).collect()).collect()
    }

    /// Jet of `G(u) = F(x + u_1·e + u_2·e_2 + …)` along the frame.
    pub fn jet<T: Num>(&self, x: &[T], order: usize) -> Result<Jet<T>> {
        let fr = self.frame_in(&x[0]).ok_or_else(|| unavailable(self, "frame"))?;
        self.jet_along(x, &fr, order).ok_or_else(|| unavailable(self, "point"))
    }
}

fn unavailable(s: &MongeSurface, what: &str) -> Error {
    Error::JetUnavailable(format!("{} at the requested {what}", s.text))
}

impl fmt::Display for MongeSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{} = {} on ", self.dim(), self.text)?;
        for (k, (lo, hi)) in self.domain.iter().enumerate() {
            if k > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "[{lo}, {hi})")?;
        }
        Ok(())
    }
}

/// The quadric of the local construction: coefficients in the adapted
/// coordinates `v` and the same form in ambient coordinates `(u₀, z, z_n)`.
#[derive(Clone, Debug)]
pub struct OsculatingQuadric<F: Field> {
    /// `a_{01}, …, a_{0n}`.
    pub a0: Vec<F>,
    /// `a_{11}, …, a_{1n}`.
    pub a1: Vec<F>,
    /// `Σ a_{0i} v₀v_i + Σ a_{1i} v₁v_i` on `v = (v₀, …, v_n)`.
    pub local: QuadraticForm<F>,
    pub form: QuadraticForm<F>,
}

fn check_point<F: Field>(s: &MongeSurface, x: &[F]) -> Result<()> {
    if x.len() != s.domain.len() {
        return Err(Error::DimensionMismatch { expected: s.domain.len(), found: x.len() });
    }
    Ok(())
}

fn unit(m: usize, hits: &[usize]) -> Vec<u8> {
    let mut e = vec![0u8; m];
    for &h in hits {
        e[h] += 1;
    }
    e
}

/// Fits the quadric whose restriction to the lifted surface vanishes to the
/// orders `R°(0) = R°_i(0) = R°_{1i}(0) = R°_{111}(0) = 0` at `x`.
pub fn osculating_quadric<F: Field>(s: &MongeSurface, x: &[F]) -> Result<OsculatingQuadric<F>> {
    check_point(s, x)?;
    let m = s.domain.len();
    let n = m + 1;
    let g = s.jet(x, 3)?;
    let d = |hits: &[usize]| g.derivative(&unit(m, hits)).ok_or_else(|| unavailable(s, "point"));
    let g11 = d(&[0, 0])?;
    let g111 = d(&[0, 0, 0])?;
    let grad = (0..m).map(|i| d(&[i])).collect::<Result<Vec<F>>>()?;
    let three = F::from_i64(3);

    let mut a0 = Vec::with_capacity(n);
    let mut a1 = Vec::with_capacity(n);
    for i in 0..m {
        a0.push(three.clone() * g11.clone() * grad[i].clone());
    }
    a0.push(-(three.clone() * g11.clone()));
    a1.push(F::from_i64(3).half() * g11.square() - grad[0].clone() * g111.clone());
    for i in 1..m {
        let g1i = d(&[0, i])?;
        a1.push(three.clone() * g1i * g11.clone() - grad[i].clone() * g111.clone());
    }
    a1.push(g111);

    let mut sv: Matrix<F> = Matrix::zeros(n + 1, n + 1);
    for i in 1..=n {
        let h = a0[i - 1].half();
        sv.set(0, i, h.clone());
        sv.set(i, 0, h);
    }
    sv.set(1, 1, a1[0].clone());
    for i in 2..=n {
        let h = a1[i - 1].half();
        sv.set(1, i, h.clone());
        sv.set(i, 1, h);
    }

    // ambient w = M v with w₀ = v₀, z = v₀x + Σ v_i e_i, z_n = v₀x_n + v_n
    let xn = g.value().clone();
    let fr = s.frame_in(&x[0]).ok_or_else(|| unavailable(s, "frame"))?;
    let mut mm: Matrix<F> = Matrix::zeros(n + 1, n + 1);
    mm.set(0, 0, F::one());
    for j in 0..m {
        mm.set(j + 1, 0, x[j].clone());
        for i in 0..m {
            mm.set(j + 1, i + 1, fr[i][j].clone());
        }
    }
    mm.set(n, 0, xn);
    mm.set(n, n, F::one());
    let tol = if F::EXACT { 0.0 } else { DEFAULT_PIVOT_TOL };
    let minv = mm.inverse(tol).ok_or_else(|| Error::InvalidInput("frame is singular".into()))?;
    let raw = minv.transpose().mul(&sv).mul(&minv);
    let sym = Matrix::from_fn(n + 1, n + 1, |i, j| (raw.get(i, j).clone() + raw.get(j, i).clone()).half());
    Ok(OsculatingQuadric { a0, a1, local: QuadraticForm::new(sv)?, form: QuadraticForm::new(sym)? })
}

/// Jet of `R°(u) = R(1, x + Σ u_i e_i, F(x + Σ u_i e_i))` for an ambient form `R`.
pub fn lifted_residual<F: Field>(s: &MongeSurface, form: &QuadraticForm<F>, x: &[F], order: usize) -> Result<Jet<F>> {
    check_point(s, x)?;
    let m = s.domain.len();
    if form.dim() != m + 2 {
        return Err(Error::DimensionMismatch { expected: m + 2, found: form.dim() });
    }
    let shape = JetShape::new(m, order);
    let fr = s.frame_in(&x[0]).ok_or_else(|| unavailable(s, "frame"))?;
    let g = s.jet_with_shape(&shape, x, &fr).ok_or_else(|| unavailable(s, "point"))?;
    let lift = |v: F| Jet::constant(&shape, v).ok_or_else(|| unavailable(s, "point"));
    let mut w = vec![lift(F::one())?];
    for j in 0..m {
        let dir: Vec<F> = fr.iter().map(|e| e[j].clone()).collect();
        w.push(Jet::affine(&shape, x[j].clone(), &dir).ok_or_else(|| unavailable(s, "point"))?);
    }
    w.push(g);
    let mut acc = lift(F::zero())?;
    let sm = form.matrix();
    for a in 0..m + 2 {
        for b in 0..m + 2 {
            let c = sm.get(a, b);
            if Field::is_zero(c) {
                continue;
            }
            let term = w[a].mul(&w[b]).and_then(|p| p.mul(&Jet::constant(&shape, c.clone())?));
            acc = term.and_then(|t| acc.add(&t)).ok_or_else(|| unavailable(s, "point"))?;
        }
    }
    Ok(acc)
}

/// The `2n` quantities `R°(0)`, `R°_i(0)`, `R°_{1i}(0)` (`i = 1..n−1`) and
/// `R°_{111}(0)` for the osculating quadric at `x`.
pub fn derivative_conditions<F: Field>(s: &MongeSurface, x: &[F]) -> Result<Vec<F>> {
    let q = osculating_quadric(s, x)?;
    let r = lifted_residual(s, &q.form, x, 3)?;
    let m = s.domain.len();
    let d = |hits: &[usize]| r.derivative(&unit(m, hits)).ok_or_else(|| unavailable(s, "point"));
    let mut out = vec![d(&[])?];
    for i in 0..m {
        out.push(d(&[i])?);
    }
    for i in 0..m {
        out.push(d(&[0, i])?);
    }
    out.push(d(&[0, 0, 0])?);
    Ok(out)
}

/// Order of contact between a plane curve and its best-fitting conic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContactOrder {
    /// The first nonzero mismatch sits at `u^(k+1)`.
    Order(u32),
    /// No mismatch through the jet order used; the curve is a conic there.
    Conic,
}

impl fmt::Display for ContactOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactOrder::Order(k) => write!(f, "{k}"),
            ContactOrder::Conic => f.write_str("inf"),
        }
    }
}

/// Jet order used by [`conic_contact_order`].
pub const CONTACT_JET_ORDER: usize = 8;

/// Fits the conic through the order-4 jet of the curve at `x` and reports
/// where the Taylor mismatch first appears.
pub fn conic_contact_order<F: Field>(s: &MongeSurface, x: &[F]) -> Result<ContactOrder> {
    if s.dim() != 2 {
        return Err(Error::InvalidInput(format!("contact order needs a plane curve, found n = {}", s.dim())));
    }
    check_point(s, x)?;
    let shape = JetShape::new(1, CONTACT_JET_ORDER);
    let fr = s.frame_in(&x[0]).ok_or_else(|| unavailable(s, "frame"))?;
    let g = s.jet_with_shape(&shape, x, &fr).ok_or_else(|| unavailable(s, "point"))?;
    let c2 = g.coeffs()[2].clone();
    let scale = g.coeffs()[..5].iter().map(Field::magnitude).fold(1.0, f64::max);
    if Field::is_zero(&c2) || (!F::EXACT && c2.magnitude() <= 1e-12 * scale) {
        return Err(Error::ZeroCurvature);
    }
    let u = Jet::affine(&shape, F::zero(), &[F::one()]).ok_or_else(|| unavailable(s, "point"))?;
    let mut h = g.clone();
    let zero = Jet::constant(&shape, g.value().clone()).ok_or_else(|| unavailable(s, "point"))?;
    h = h.sub(&zero).ok_or_else(|| unavailable(s, "point"))?;
    let one = Jet::constant(&shape, F::one()).ok_or_else(|| unavailable(s, "point"))?;
    let monos = [Some(one), Some(u.clone()), Some(h.clone()), u.mul(&u), u.mul(&h), h.mul(&h)]
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| unavailable(s, "point"))?;
    let eqs = Matrix::from_fn(5, 6, |k, j| monos[j].coeffs()[k].clone());
    let tol = if F::EXACT { 0.0 } else { 1e-10 };
    let ker = eqs.kernel(tol);
    if ker.len() != 1 {
        return Err(Error::ZeroCurvature);
    }
    let c = &ker[0];
    let global = (0..6)
        .flat_map(|j| monos[j].coeffs().iter().map(move |m| c[j].magnitude() * m.magnitude()))
        .fold(0.0, f64::max);
    for k in 5..=CONTACT_JET_ORDER {
        let mismatch = (0..6).map(|j| c[j].clone() * monos[j].coeffs()[k].clone()).fold(F::zero(), |a, b| a + b);
        let nonzero = if F::EXACT { !Field::is_zero(&mismatch) } else { mismatch.magnitude() > 1e-9 * global };
        if nonzero {
            return Ok(ContactOrder::Order(k as u32 - 1));
        }
    }
    Ok(ContactOrder::Conic)
}
