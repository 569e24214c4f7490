use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::exactlin::{Field, Matrix, NilpotentGenerator};
use crate::quadforms::QuadraticForm;

/// A quadric `R` with a basis `z, e, e3, …, en` such that `R(z + t·e) = B·t²`.
#[derive(Clone, Debug)]
pub struct QuadricDatum<F> {
    r: QuadraticForm<F>,
    z: Vec<F>,
    e: Vec<F>,
    extra: Vec<Vec<F>>,
    /// Columns `z, e, e3, …`.
    basis: Matrix<F>,
    basis_inv: Matrix<F>,
    b_coef: F,
}

impl<F: Field> QuadricDatum<F> {
    pub fn new(r: QuadraticForm<F>, z: Vec<F>, e: Vec<F>, extra: Vec<Vec<F>>) -> Result<Self> {
        let n = r.dim();
        if z.len() != n || e.len() != n || extra.len() + 2 != n || extra.iter().any(|v| v.len() != n) {
            return Err(Error::DegenerateDatum(format!("need {n} basis vectors of length {n}")));
        }
        if !r.eval(&z).is_zero() {
            return Err(Error::DegenerateDatum("R(z) != 0".into()));
        }
        if !r.pairing(&z, &e).is_zero() {
            return Err(Error::DegenerateDatum("<z, e>_R != 0".into()));
        }
        let b_coef = r.eval(&e);
        if b_coef.is_zero() {
            return Err(Error::DegenerateDatum("R(e) = 0".into()));
        }
        let mut cols = vec![z.clone(), e.clone()];
        cols.extend(extra.iter().cloned());
        let basis = Matrix::from_columns(&cols);
        let basis_inv = basis.inverse(1e-12).ok_or_else(|| Error::DegenerateDatum("z, e, e_i are not a basis".into()))?;
        Ok(Self { r, z, e, extra, basis, basis_inv, b_coef })
    }

    pub fn form(&self) -> &QuadraticForm<F> {
        &self.r
    }
    pub fn z(&self) -> &[F] {
        &self.z
    }
    pub fn e(&self) -> &[F] {
        &self.e
    }
    pub fn extra(&self) -> &[Vec<F>] {
        &self.extra
    }
    pub fn dim(&self) -> usize {
        self.r.dim()
    }
    /// `B` with `R(z + t·e) = B·t²`.
    pub fn b_coef(&self) -> &F {
        &self.b_coef
    }
    pub fn basis(&self) -> &Matrix<F> {
        &self.basis
    }
    /// Rows give the coordinates `κ` of a vector in the datum basis.
    pub fn basis_inv(&self) -> &Matrix<F> {
        &self.basis_inv
    }

    /// Whether `⟨e_i, z⟩_R ≠ 0` for some `i ≥ 3`.
    pub fn is_nonsingular(&self) -> bool {
        self.extra.iter().any(|v| !self.r.pairing(v, &self.z).is_zero())
    }

    /// The same quadric with basis vectors rescaled.
    pub fn rescaled(&self, kz: &F, ke: &F, kextra: &[F]) -> Result<Self> {
        let sc = |v: &[F], k: &F| v.iter().map(|x| x.clone() * k.clone()).collect::<Vec<F>>();
        let extra = self.extra.iter().zip(kextra).map(|(v, k)| sc(v, k)).collect();
        Self::new(self.r.clone(), sc(&self.z, kz), sc(&self.e, ke), extra)
    }
}

/// `w·v = ⟨v, e⟩_R·z − ⟨v, z⟩_R·e`: kills `z`, sends `e ↦ ⟨e,e⟩_R·z` and
/// `e_i ↦ ⟨e_i,e⟩_R·z − ⟨e_i,z⟩_R·e`, and preserves `R`.
pub fn quadric_generator<F: Field>(d: &QuadricDatum<F>) -> Result<NilpotentGenerator<F>> {
    let n = d.dim();
    let s = d.form().matrix();
    // ⟨v, u⟩_R = 2·uᵀ·S·v, so the row functional of ⟨·, u⟩_R is 2·(S·u)ᵀ
    let se = s.mul_vec(d.e());
    let sz = s.mul_vec(d.z());
    let w = Matrix::from_fn(n, n, |i, j| {
        (d.z()[i].clone() * se[j].clone() - d.e()[i].clone() * sz[j].clone()).mul_i64(2)
    });
    let defect = d.form().invariance_defect(&w);
    if !defect.is_negligible(1.0 + w.max_magnitude() * s.max_magnitude(), 1e-9) {
        return Err(Error::DegenerateDatum("generator does not preserve R".into()));
    }
    if !d.is_nonsingular() {
        return Err(Error::SquareVanishes);
    }
    NilpotentGenerator::new(w)
}

/// Discriminant `b² − 4ac` of `R` restricted to the plane `u, v`, with
/// `R(s·u + t·v) = a·s² + b·s·t + c·t²`. Zero means the plane is tangent to
/// the cone of `R`.
pub fn plane_discriminant<F: Field>(r: &QuadraticForm<F>, u: &[F], v: &[F]) -> F {
    let a = r.eval(u);
    let b = r.pairing(u, v);
    let c = r.eval(v);
    b.square() - (a * c).mul_i64(4)
}

pub(crate) fn is_lt<F: Field>(a: &F, b: &F) -> bool {
    a.cmp_to(b) == Ordering::Less
}
