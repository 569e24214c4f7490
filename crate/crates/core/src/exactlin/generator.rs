//! Validated rank-2 nilpotent generators and their slicing geometry.
//!
//! For `w` with `w³ = 0`, `w² ≠ 0` and rank 2, every `x ∉ ker(w²)` factors
//! uniquely as `x = exp(t·w)·z` with `z` in the hyperplane
//! `L_w = Img(w)^⊥ ⊕ Img(w²)`. The hyperplane has normal `y`, the vector of
//! `Img(w)` orthogonal to `Img(w²)`, and `t = ⟨x,y⟩ / ⟨w·x,y⟩`.

use std::cmp::Ordering;

use num_rational::BigRational;

use super::field::{Field, DEFAULT_PIVOT_TOL};
use super::matrix::{dot, Matrix};
use super::quadratic::QuadraticNumber;
use super::scalar::{MatrixInput, ScalarMode};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NilpotentGenerator<F> {
    w: Matrix<F>,
    w2: Matrix<F>,
    img_w: Vec<Vec<F>>,
    v2: Vec<F>,
    ker_w2: Vec<Vec<F>>,
    y: Vec<F>,
    l_basis: Vec<Vec<F>>,
    /// `wᵀ·y`, so that `⟨w·x, y⟩ = ⟨dvec, x⟩`.
    dvec: Vec<F>,
    /// Inverse of the matrix with columns `l_basis ++ [y]`.
    coords: Matrix<F>,
    pivot_tol: f64,
}

/// Scales `v` so that its first nonzero coordinate is 1 (exact fields) or
/// to unit length (`f64`).
fn normalize<F: Field>(v: Vec<F>) -> Vec<F> {
    if F::EXACT {
        let Some(lead) = v.iter().find(|x| !x.is_zero()).cloned() else { return v };
        v.into_iter().map(|x| x / lead.clone()).collect()
    } else {
        let norm = v.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return v;
        }
        let lead_neg = v.iter().find(|x| x.magnitude() > 0.0).is_some_and(|x| x.signum() == Ordering::Less);
        let s = if lead_neg { -1.0 / norm } else { 1.0 / norm };
        v.into_iter().map(|x| x * F::from_rational(&rational_of(s))).collect()
    }
}

fn rational_of(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

impl<F: Field> NilpotentGenerator<F> {
    pub fn new(w: Matrix<F>) -> Result<Self> {
        Self::with_tolerance(w, DEFAULT_PIVOT_TOL)
    }

    /// Validates `w`; `pivot_tol` is the relative rank threshold used by `f64`.
    pub fn with_tolerance(w: Matrix<F>, pivot_tol: f64) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch { expected: w.rows(), found: w.cols() });
        }
        let n = w.rows();
        if n < 3 {
            return Err(Error::InvalidInput(format!("generator dimension must be at least 3, found {n}")));
        }
        let scale = w.max_magnitude();
        let tr = w.trace();
        if !tr.is_negligible(scale * n as f64, pivot_tol) {
            return Err(Error::NotNilpotent("nonzero trace".into()));
        }
        let w2 = w.mul(&w);
        let w3 = w2.mul(&w);
        let s3 = scale.powi(3) * (n * n) as f64;
        if !w3.is_negligible(s3, pivot_tol) {
            return Err(Error::NotNilpotent("w^3 != 0".into()));
        }
        if w2.is_negligible(scale * scale * n as f64, pivot_tol) {
            return Err(Error::SquareVanishes);
        }
        let rank = w.rank(pivot_tol);
        if rank != 2 {
            return Err(Error::WrongRank(rank));
        }

        let (_, piv_w) = w.rref(pivot_tol);
        let img_w: Vec<Vec<F>> = piv_w.iter().map(|&c| w.column(c)).collect();
        let (_, piv_w2) = w2.rref(pivot_tol);
        let v2 = normalize(w2.column(piv_w2[0]));
        let ker_w2 = w2.kernel(pivot_tol);

        let (a1, a2) = (&img_w[0], &img_w[1]);
        let c1 = dot(a2, &v2);
        let c2 = dot(a1, &v2);
        let y: Vec<F> = a1.iter().zip(a2).map(|(p, q)| c1.clone() * p.clone() - c2.clone() * q.clone()).collect();
        let y = normalize(y);

        let perp = Matrix::from_rows(vec![a1.clone(), a2.clone()])?.kernel(pivot_tol);
        let mut l_basis = vec![v2.clone()];
        l_basis.extend(perp);
        if l_basis.len() != n - 1 {
            return Err(Error::WrongRank(n + 1 - l_basis.len()));
        }
        let dvec = w.transpose().mul_vec(&y);
        let mut cols = l_basis.clone();
        cols.push(y.clone());
        let coords = Matrix::from_columns(&cols)
            .inverse(pivot_tol)
            .ok_or_else(|| Error::NotNilpotent("slicing hyperplane is degenerate".into()))?;
        Ok(Self { w, w2, img_w, v2, ker_w2, y, l_basis, dvec, coords, pivot_tol })
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }
    pub fn matrix(&self) -> &Matrix<F> {
        &self.w
    }
    pub fn square(&self) -> &Matrix<F> {
        &self.w2
    }
    /// Basis of `Img(w)` (pivot columns of `w`).
    pub fn img_w(&self) -> &[Vec<F>] {
        &self.img_w
    }
    /// Spanning vector of `Img(w²)`.
    pub fn v2(&self) -> &[F] {
        &self.v2
    }
    pub fn ker_w2(&self) -> &[Vec<F>] {
        &self.ker_w2
    }
    /// Normal of `L_w`; spans `Img(w) ∩ Img(w²)^⊥`.
    pub fn y_slicer(&self) -> &[F] {
        &self.y
    }
    /// Basis of `L_w`: `v2` first, then a basis of `Img(w)^⊥`.
    pub fn l_w_basis(&self) -> &[Vec<F>] {
        &self.l_basis
    }
    /// `wᵀ·y`; the linear form `x ↦ ⟨w·x, y⟩`, constant along orbits.
    pub fn d_form(&self) -> &[F] {
        &self.dvec
    }
    /// Rows map a vector to its coefficients in `l_w_basis ++ [y]`.
    pub fn coordinate_map(&self) -> &Matrix<F> {
        &self.coords
    }
    pub fn pivot_tol(&self) -> f64 {
        self.pivot_tol
    }

    fn check_dim(&self, v: &[F]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// `exp(t·w)·v = v + t·w·v + t²/2·w²·v`.
    pub fn unipotent_apply(&self, t: &F, v: &[F]) -> Result<Vec<F>> {
        self.check_dim(v)?;
        Ok(self.apply_unchecked(t, v))
    }

    pub(crate) fn apply_unchecked(&self, t: &F, v: &[F]) -> Vec<F> {
        if t.is_zero() {
            return v.to_vec();
        }
        let wv = self.w.mul_vec(v);
        let w2v = self.w2.mul_vec(v);
        let half_t2 = t.square().half();
        v.iter()
            .zip(wv)
            .zip(w2v)
            .map(|((a, b), c)| a.clone() + t.clone() * b + half_t2.clone() * c)
            .collect()
    }

    /// `⟨w·x, y⟩`.
    pub fn d_value(&self, x: &[F]) -> F {
        dot(&self.dvec, x)
    }

    /// `⟨x, y⟩`.
    pub fn n_value(&self, x: &[F]) -> F {
        dot(&self.y, x)
    }

    /// Whether `⟨w·x, y⟩` vanishes (to tolerance in float mode).
    pub fn in_kernel(&self, x: &[F]) -> bool {
        let d = self.d_value(x);
        if F::EXACT {
            return d.is_zero();
        }
        let scale = self.dvec.iter().map(Field::magnitude).sum::<f64>() * x.iter().map(Field::magnitude).fold(0.0, f64::max);
        d.is_negligible(scale, self.pivot_tol)
    }

    /// The unique `t` with `exp(−t·w)·x ∈ L_w`.
    pub fn slice_time(&self, x: &[F]) -> Result<F> {
        self.check_dim(x)?;
        if self.in_kernel(x) {
            return Err(Error::InKernel);
        }
        Ok(self.n_value(x) / self.d_value(x))
    }

    /// `(t, z)` with `x = exp(t·w)·z` and `z ∈ L_w`.
    pub fn decompose(&self, x: &[F]) -> Result<(F, Vec<F>)> {
        let t = self.slice_time(x)?;
        let z = self.apply_unchecked(&(-t.clone()), x);
        Ok((t, z))
    }

    /// Coefficients of a vector in `l_w_basis` (the `y` component dropped).
    pub fn base_coords(&self, z: &[F]) -> Vec<F> {
        let n = self.dim();
        (0..n - 1).map(|j| dot(self.coords.row(j), z)).collect()
    }

    /// The point of `L_w` with the given coefficients.
    pub fn base_point(&self, c: &[F]) -> Vec<F> {
        super::matrix::lin_comb(c, &self.l_basis)
    }

    /// The same generator scaled by `k ≠ 0`.
    pub fn scaled(&self, k: &F) -> Result<Self> {
        Self::with_tolerance(self.w.scale(k), self.pivot_tol)
    }
}

/// A generator in whichever scalar mode it was loaded.
#[derive(Clone, Debug)]
pub enum AnyGenerator {
    Rational(NilpotentGenerator<BigRational>),
    Quadratic(NilpotentGenerator<QuadraticNumber>),
    Float(NilpotentGenerator<f64>),
}

impl AnyGenerator {
    /// Loads and validates a JSON matrix, honoring its declared mode unless
    /// `force_float` asks for a float copy.
    pub fn from_input(input: &MatrixInput, force_float: bool) -> Result<Self> {
        if force_float {
            return Ok(Self::Float(NilpotentGenerator::new(input.to_field()?)?));
        }
        Ok(match input.mode {
            ScalarMode::Rational => Self::Rational(NilpotentGenerator::new(input.to_field()?)?),
            ScalarMode::Quadratic => Self::Quadratic(NilpotentGenerator::new(input.to_field()?)?),
            ScalarMode::Float => Self::Float(NilpotentGenerator::new(input.to_field()?)?),
        })
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Self::Rational(_) => ScalarMode::Rational,
            Self::Quadratic(_) => ScalarMode::Quadratic,
            Self::Float(_) => ScalarMode::Float,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Rational(g) => g.dim(),
            Self::Quadratic(g) => g.dim(),
            Self::Float(g) => g.dim(),
        }
    }

    pub fn to_input(&self) -> MatrixInput {
        match self {
            Self::Rational(g) => MatrixInput::from_matrix(g.matrix()),
            Self::Quadratic(g) => MatrixInput::from_matrix(g.matrix()),
            Self::Float(g) => MatrixInput::from_matrix(g.matrix()),
        }
    }
}
