//! Quadratic forms, invariance under a nilpotent generator and the search
//! for rational invariant forms.

mod diagnostic;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactlin::{dot, Field, Matrix, MatrixInput, NilpotentGenerator, QuadraticNumber};

pub use diagnostic::{effectiveness_diagnostic, DiagnosticResult};

/// `P(v) = vᵀ·S·v` for a symmetric matrix `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<F> {
    s: Matrix<F>,
}

/// Upper-triangle index pairs `(i, j)`, `i ≤ j`, in lexicographic order.
pub fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

impl<F: Field> QuadraticForm<F> {
    pub fn new(s: Matrix<F>) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::DimensionMismatch { expected: s.rows(), found: s.cols() });
        }
        let n = s.rows();
        for i in 0..n {
            for j in i + 1..n {
                if s.get(i, j) != s.get(j, i) {
                    return Err(Error::InvalidInput(format!("form matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { s })
    }

    /// From monomial coefficients `a_ij` of `Σ_{i≤j} a_ij x_i x_j`.
    pub fn from_monomials(n: usize, terms: &[(usize, usize, F)]) -> Self {
        let mut s: Matrix<F> = Matrix::zeros(n, n);
        for (i, j, a) in terms {
            let (i, j) = if i <= j { (*i, *j) } else { (*j, *i) };
            if i == j {
                let v = s.get(i, i).clone() + a.clone();
                s.set(i, i, v);
            } else {
                let v = s.get(i, j).clone() + a.half();
                s.set(i, j, v.clone());
                s.set(j, i, v);
            }
        }
        Self { s }
    }

    /// From the upper-triangle entries `s_ij` in [`upper_pairs`] order.
    pub fn from_vectorized(n: usize, v: &[F]) -> Self {
        let mut s = Matrix::zeros(n, n);
        for ((i, j), x) in upper_pairs(n).into_iter().zip(v) {
            s.set(i, j, x.clone());
            s.set(j, i, x.clone());
        }
        Self { s }
    }

    pub fn dim(&self) -> usize {
        self.s.rows()
    }
    pub fn matrix(&self) -> &Matrix<F> {
        &self.s
    }

    pub fn vectorized(&self) -> Vec<F> {
        upper_pairs(self.dim()).into_iter().map(|(i, j)| self.s.get(i, j).clone()).collect()
    }

    /// Coefficient `a_ij` of `x_i x_j` (`i ≤ j`).
    pub fn monomial(&self, i: usize, j: usize) -> F {
        if i == j {
            self.s.get(i, i).clone()
        } else {
            self.s.get(i, j).mul_i64(2)
        }
    }

    pub fn eval(&self, v: &[F]) -> F {
        dot(v, &self.s.mul_vec(v))
    }

    /// `⟨u, v⟩_P = P(u+v) − P(u) − P(v) = 2·uᵀ·S·v`.
    pub fn pairing(&self, u: &[F], v: &[F]) -> F {
        dot(u, &self.s.mul_vec(v)).mul_i64(2)
    }

    pub fn is_zero(&self) -> bool {
        self.s.entries().iter().all(Field::is_zero)
    }

    pub fn scale(&self, k: &F) -> Self {
        Self { s: self.s.scale(k) }
    }

    /// `wᵀ·S + S·w`, which vanishes exactly when `P` is `exp(t·w)`-invariant.
    pub fn invariance_defect(&self, w: &Matrix<F>) -> Matrix<F> {
        w.transpose().mul(&self.s).add(&self.s.mul(w))
    }

    /// Whether every coefficient is rational.
    pub fn is_rational(&self) -> bool {
        self.s.entries().iter().all(|x| x.to_rational().is_some())
    }

    pub fn to_json(&self) -> MatrixInput {
        MatrixInput::from_matrix(&self.s)
    }
}

impl<F: Field + fmt::Display> fmt::Display for QuadraticForm<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in upper_pairs(self.dim()) {
            let a = self.monomial(i, j);
            if a.is_zero() {
                continue;
            }
            let mono = if i == j { format!("x{}^2", i + 1) } else { format!("x{}*x{}", i + 1, j + 1) };
            let (neg, mag) = if a.signum() == std::cmp::Ordering::Less { (true, -a) } else { (false, a) };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let text = mag.to_string();
            if text == "1" {
                write!(f, "{mono}")?;
            } else if text.contains(' ') {
                write!(f, "({text})*{mono}")?;
            } else {
                write!(f, "{text}*{mono}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<F: Field> Serialize for QuadraticForm<F> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Basis of the quadratic forms preserved by `exp(t·w)`.
#[derive(Clone, Debug)]
pub struct InvariantFormSpace<F> {
    pub n: usize,
    /// In reduced row-echelon form over the [`upper_pairs`] vectorization.
    pub basis: Vec<QuadraticForm<F>>,
}

/// Kernel of `S ↦ wᵀS + Sw` on symmetric matrices.
pub fn invariant_form_space<F: Field>(g: &NilpotentGenerator<F>) -> InvariantFormSpace<F> {
    let n = g.dim();
    let pairs = upper_pairs(n);
    let m = pairs.len();
    let w = g.matrix();
    let mut op = Matrix::zeros(m, m);
    for col in 0..m {
        let mut e = vec![F::zero(); m];
        e[col] = F::one();
        let img = QuadraticForm::from_vectorized(n, &e).invariance_defect(w);
        for (row, &(i, j)) in pairs.iter().enumerate() {
            op.set(row, col, img.get(i, j).clone());
        }
    }
    let kernel = op.kernel(g.pivot_tol());
    let basis = if kernel.is_empty() {
        Vec::new()
    } else {
        let (r, piv) = Matrix::from_rows(kernel).expect("rectangular").rref(g.pivot_tol());
        (0..piv.len()).map(|i| QuadraticForm::from_vectorized(n, r.row(i))).collect()
    };
    InvariantFormSpace { n, basis }
}

/// Result of the rational-member search.
#[derive(Clone, Debug, Serialize)]
pub struct RationalDetection<F: Field> {
    pub form: Option<QuadraticForm<F>>,
    /// Set in float mode when nothing was found: absence is not a proof.
    pub inconclusive: bool,
    pub method: &'static str,
}

/// Finds a nonzero form with rational coefficients in the span of `space`.
///
/// Over `ℚ` any basis element qualifies. Over `ℚ(√d)` the RREF basis forces
/// the coefficients of a rational combination to be rational, so the search
/// is a rational kernel computation on the `√d` parts. In `f64` the search
/// is heuristic: half-integer coefficients of magnitude at most
/// `height_bound` are tried at the pivot positions and accepted when the
/// combination is within `1e-8` of an integral form of height at most
/// `height_bound`.
pub fn detect_rational_invariant<F: Field>(space: &InvariantFormSpace<F>, height_bound: u64) -> RationalDetection<F> {
    if space.basis.is_empty() {
        return RationalDetection { form: None, inconclusive: !F::EXACT, method: "empty" };
    }
    match F::MODE {
        "rational" => RationalDetection { form: Some(space.basis[0].clone()), inconclusive: false, method: "rational basis" },
        "quadratic" => detect_quadratic(space),
        _ => detect_float(space, height_bound),
    }
}

fn detect_quadratic<F: Field>(space: &InvariantFormSpace<F>) -> RationalDetection<F> {
    let vecs: Vec<Vec<F>> = space.basis.iter().map(QuadraticForm::vectorized).collect();
    let m = vecs[0].len();
    let k = vecs.len();
    // columns = √d parts of the basis vectors
    let irr = Matrix::from_fn(m, k, |r, c| {
        let x = vecs[c][r].to_scalar();
        match x {
            crate::exactlin::Scalar::Quadratic(q) => q.b().clone(),
            _ => BigRational::zero(),
        }
    });
    let kernel = irr.kernel(0.0);
    let Some(lambda) = kernel.first() else {
        return RationalDetection { form: None, inconclusive: false, method: "exact sqrt-part elimination" };
    };
    let coef: Vec<F> = lambda.iter().map(F::from_rational).collect();
    let v = crate::exactlin::lin_comb(&coef, &vecs);
    let form = QuadraticForm::from_vectorized(space.n, &v);
    RationalDetection { form: Some(form), inconclusive: false, method: "exact sqrt-part elimination" }
}

fn detect_float<F: Field>(space: &InvariantFormSpace<F>, height_bound: u64) -> RationalDetection<F> {
    let vecs: Vec<Vec<f64>> = space.basis.iter().map(|b| b.vectorized().iter().map(Field::to_f64).collect()).collect();
    let n = space.n;
    let pairs = upper_pairs(n);
    let k = vecs.len();
    let h = height_bound as i64;
    let steps = 4 * h + 1;
    let total = (steps as u128).pow(k as u32);
    let mut best: Option<(i64, Vec<f64>)> = None;
    if total <= 50_000_000 {
        for idx in 0..total {
            let mut rem = idx;
            let mut lambda = Vec::with_capacity(k);
            for _ in 0..k {
                let q = (rem % steps as u128) as i64;
                rem /= steps as u128;
                lambda.push((q - 2 * h) as f64 * 0.5);
            }
            match lambda.iter().find(|x| **x != 0.0) {
                Some(x) if *x > 0.0 => {}
                _ => continue,
            }
            let mut height = 0i64;
            let mut coeffs = Vec::with_capacity(pairs.len());
            let mut ok = true;
            for (r, &(i, j)) in pairs.iter().enumerate() {
                let s: f64 = lambda.iter().zip(&vecs).map(|(l, v)| l * v[r]).sum();
                let a = if i == j { s } else { 2.0 * s };
                let ai = a.round();
                if (a - ai).abs() > 1e-8 || ai.abs() > h as f64 {
                    ok = false;
                    break;
                }
                height = height.max(ai.abs() as i64);
                coeffs.push(if i == j { ai } else { ai * 0.5 });
            }
            if ok && height > 0 && best.as_ref().is_none_or(|(bh, _)| height < *bh) {
                best = Some((height, coeffs));
            }
        }
    }
    match best {
        Some((_, coeffs)) => {
            let v: Vec<F> = coeffs.iter().map(|&c| F::from_rational(&BigRational::from_float(c).expect("finite"))).collect();
            RationalDetection { form: Some(QuadraticForm::from_vectorized(n, &v)), inconclusive: false, method: "float height search" }
        }
        None => RationalDetection { form: None, inconclusive: true, method: "float height search" },
    }
}

/// Solves `P = a·R + Σ a_ij A_i A_j` for rational `a, a_ij`, returning the
/// coefficients when `P` lies in that pencil.
pub fn pencil_membership(p: &QuadraticForm<QuadraticNumber>, r: &QuadraticForm<QuadraticNumber>, lin: &[Vec<QuadraticNumber>]) -> Option<Vec<BigRational>> {
    let n = p.dim();
    let mut gens = vec![r.vectorized()];
    for i in 0..lin.len() {
        for j in i..lin.len() {
            let prod = Matrix::from_fn(n, n, |a, b| {
                (lin[i][a].clone() * lin[j][b].clone() + lin[j][a].clone() * lin[i][b].clone()).half()
            });
            gens.push(QuadraticForm { s: prod }.vectorized());
        }
    }
    // split every coordinate into rational and sqrt parts: rows of a rational system
    let target = p.vectorized();
    let k = gens.len();
    let mut rows = Vec::new();
    for r_idx in 0..target.len() {
        for part in 0..2 {
            let pick = |x: &QuadraticNumber| if part == 0 { x.a().clone() } else { x.b().clone() };
            let mut row: Vec<BigRational> = gens.iter().map(|g| pick(&g[r_idx])).collect();
            row.push(-pick(&target[r_idx]));
            rows.push(row);
        }
    }
    let sys = Matrix::from_rows(rows).ok()?;
    // kernel vectors with last coordinate 1 give solutions
    for v in sys.kernel(0.0) {
        if !v[k].is_zero() {
            let scale = v[k].clone();
            return Some(v[..k].iter().map(|x| x / &scale).collect());
        }
    }
    None
}

/// Integer coefficients of a form, when all monomial coefficients are integral.
pub fn integral_monomials<F: Field>(p: &QuadraticForm<F>) -> Option<Vec<i64>> {
    upper_pairs(p.dim())
        .into_iter()
        .map(|(i, j)| {
            let r = p.monomial(i, j).to_rational()?;
            r.is_integer().then(|| r.to_integer()).and_then(|x: BigInt| x.to_i64())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn pairing_matches_polarization() {
        let p = QuadraticForm::from_monomials(3, &[(0, 2, q(1)), (1, 1, q(-1)), (0, 1, q(3))]);
        let u = vec![q(1), q(-2), q(5)];
        let v = vec![q(3), q(1), q(-4)];
        let sum: Vec<_> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        assert_eq!(p.pairing(&u, &v), p.eval(&sum) - p.eval(&u) - p.eval(&v));
    }

    #[test]
    fn display_polynomial() {
        let p = QuadraticForm::from_monomials(3, &[(0, 2, q(2)), (1, 1, q(-1))]);
        assert_eq!(p.to_string(), "2*x1*x3 - x2^2");
    }
}
