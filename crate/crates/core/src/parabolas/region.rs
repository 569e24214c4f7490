use num_rational::BigRational;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactlin::{dot, Field, Matrix, NilpotentGenerator};

/// The solid `{exp(t·w)·z : t ∈ [T, βT], z ∈ B}` with `B` a half-open box in
/// the coordinates of `l_w_basis`.
#[derive(Clone, Debug)]
pub struct ThickenedParabolaRegion<F> {
    g: NilpotentGenerator<F>,
    lo: Vec<F>,
    hi: Vec<F>,
    t: F,
    beta: F,
}

/// Solid volume, exact when the metric factor has a square root in the field.
#[derive(Clone, Debug)]
pub struct Volume<F> {
    pub value: f64,
    pub exact: Option<F>,
}

impl<F: Field> ThickenedParabolaRegion<F> {
    pub fn new(g: NilpotentGenerator<F>, lo: Vec<F>, hi: Vec<F>, t: F, beta: F) -> Result<Self> {
        let m = g.dim() - 1;
        for v in [&lo, &hi] {
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: v.len() });
            }
        }
        if lo.iter().zip(&hi).any(|(a, b)| a.cmp_to(b) != std::cmp::Ordering::Less) {
            return Err(Error::InvalidInput("box must have positive volume".into()));
        }
        if t.signum() != std::cmp::Ordering::Greater {
            return Err(Error::InvalidInput("T must be positive".into()));
        }
        if beta.cmp_to(&F::one()) != std::cmp::Ordering::Greater {
            return Err(Error::InvalidInput("beta must exceed 1".into()));
        }
        Ok(Self { g, lo, hi, t, beta })
    }

    pub fn generator(&self) -> &NilpotentGenerator<F> {
        &self.g
    }
    pub fn box_lo(&self) -> &[F] {
        &self.lo
    }
    pub fn box_hi(&self) -> &[F] {
        &self.hi
    }
    pub fn t(&self) -> &F {
        &self.t
    }
    pub fn beta(&self) -> &F {
        &self.beta
    }
    pub fn t_end(&self) -> F {
        self.t.clone() * self.beta.clone()
    }
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Same generator and window with a different box.
    pub fn with_box(&self, lo: Vec<F>, hi: Vec<F>) -> Result<Self> {
        Self::new(self.g.clone(), lo, hi, self.t.clone(), self.beta.clone())
    }

    /// Same box with a different time window.
    pub fn with_window(&self, t: F, beta: F) -> Result<Self> {
        Self::new(self.g.clone(), self.lo.clone(), self.hi.clone(), t, beta)
    }

    /// Exact membership of a vector given in the field.
    pub fn contains_field(&self, x: &[F]) -> bool {
        if x.len() != self.dim() || self.g.in_kernel(x) {
            return false;
        }
        let t = self.g.n_value(x) / self.g.d_value(x);
        if t.cmp_to(&self.t) == std::cmp::Ordering::Less || t.cmp_to(&self.t_end()) == std::cmp::Ordering::Greater {
            return false;
        }
        let z = self.g.apply_unchecked(&(-t), x);
        let c = self.g.base_coords(&z);
        c.iter().zip(&self.lo).zip(&self.hi).all(|((c, lo), hi)| {
            c.cmp_to(lo) != std::cmp::Ordering::Less && c.cmp_to(hi) == std::cmp::Ordering::Less
        })
    }

    /// Closed time window, half-open box.
    pub fn contains(&self, x: &[i64]) -> bool {
        let xf: Vec<F> = x.iter().map(|&v| F::from_i64(v)).collect();
        self.contains_field(&xf)
    }

    /// `sqrt(det Gram(l_w_basis) / ⟨y, y⟩)`, squared.
    fn metric_factor_sq(&self) -> F {
        let basis = self.g.l_w_basis();
        let m = basis.len();
        let gram = Matrix::from_fn(m, m, |i, j| dot(&basis[i], &basis[j]));
        let y = self.g.y_slicer();
        gram.determinant() / dot(y, y)
    }

    /// `D(z) = Σ c_j·g_j` for base coordinates `c`.
    fn d_on_box(&self) -> Vec<F> {
        self.g.l_w_basis().iter().map(|b| self.g.d_value(b)).collect()
    }

    /// `(β−1)·T·∫_B |⟨w·z, ν⟩| dz` with `ν` the unit normal of `L_w`.
    pub fn volume(&self) -> Volume<F> {
        let coef = self.d_on_box();
        let integral = abs_linear_box_integral(&coef, &self.lo, &self.hi);
        let window = (self.beta.clone() - F::one()) * self.t.clone();
        let base = window * integral;
        let msq = self.metric_factor_sq();
        let value = base.to_f64() * msq.to_f64().sqrt();
        let exact = msq.try_sqrt().map(|m| base * m);
        let value = exact.as_ref().map(Field::to_f64).unwrap_or(value);
        Volume { value, exact }
    }

    /// The box `B′ = {z : dist(z, L_w ∖ B) > ε}`, rounded to rationals.
    pub fn shrink(&self, eps: f64) -> Result<Self> {
        let basis = self.g.l_w_basis();
        let m = basis.len();
        let gram = Matrix::from_fn(m, m, |i, j| dot(&basis[i], &basis[j]).to_f64());
        let inv = gram.inverse(1e-12).ok_or_else(|| Error::DegenerateDatum("singular base Gram matrix".into()))?;
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        for j in 0..m {
            // distance to the face c_j = const is |Δc_j| / |dual_j|
            let dual = inv.get(j, j).sqrt();
            let d = F::from_rational(&BigRational::from_float(eps * dual).expect("finite"));
            lo.push(self.lo[j].clone() + d.clone());
            hi.push(self.hi[j].clone() - d);
        }
        self.with_box(lo, hi)
    }

    /// Integer bounding box of the solid, padded outward.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let n = self.dim();
        let m = n - 1;
        let basis = self.g.l_w_basis();
        let w = self.g.matrix().map(Field::to_f64);
        let w2 = self.g.square().map(Field::to_f64);
        let (t0, t1) = (self.t.to_f64(), self.t_end().to_f64());
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for mask in 0..(1u32 << m) {
            let c: Vec<f64> = (0..m)
                .map(|j| if mask >> j & 1 == 1 { self.hi[j].to_f64() } else { self.lo[j].to_f64() })
                .collect();
            let z: Vec<f64> = (0..n).map(|i| (0..m).map(|j| c[j] * basis[j][i].to_f64()).sum()).collect();
            let wz = w.mul_vec(&z);
            let w2z = w2.mul_vec(&z);
            for i in 0..n {
                // x_i(t) = z_i + t·(wz)_i + t²/2·(w²z)_i on [t0, t1]
                let q = |t: f64| z[i] + t * wz[i] + 0.5 * t * t * w2z[i];
                let mut cands = vec![q(t0), q(t1)];
                if w2z[i] != 0.0 {
                    let tc = -wz[i] / w2z[i];
                    if tc > t0 && tc < t1 {
                        cands.push(q(tc));
                    }
                }
                for v in cands {
                    lo[i] = lo[i].min(v);
                    hi[i] = hi[i].max(v);
                }
            }
        }
        let pad = |v: f64| 1e-9 * (1.0 + v.abs());
        (
            lo.iter().map(|&v| (v - pad(v)).floor() as i64).collect(),
            hi.iter().map(|&v| (v + pad(v)).ceil() as i64).collect(),
        )
    }

    pub fn params(&self) -> Value {
        json!({
            "mode": F::MODE,
            "generator": crate::exactlin::MatrixInput::from_matrix(self.g.matrix()),
            "box_lo": self.lo.iter().map(Field::to_scalar).collect::<Vec<_>>(),
            "box_hi": self.hi.iter().map(Field::to_scalar).collect::<Vec<_>>(),
            "T": self.t.to_scalar(),
            "beta": self.beta.to_scalar(),
        })
    }
}

fn pos<F: Field>(x: F) -> F {
    if x.signum() == std::cmp::Ordering::Greater {
        x
    } else {
        F::zero()
    }
}

/// `∫_{[lo,hi]} |Σ g_j c_j| dc`, exactly.
///
/// Integrating `max(L, 0)^k / k!` along a coordinate with `L`'s slope `g_j`
/// gives `max(L, 0)^{k+1} / ((k+1)!·g_j)`, so the box integral of `max(L,0)`
/// is an alternating vertex sum. Axes with `g_j = 0` factor out.
pub fn abs_linear_box_integral<F: Field>(g: &[F], lo: &[F], hi: &[F]) -> F {
    let mut width = F::one();
    let mut axes = Vec::new();
    for j in 0..g.len() {
        if g[j].is_zero() {
            width = width * (hi[j].clone() - lo[j].clone());
        } else {
            axes.push(j);
        }
    }
    if axes.is_empty() {
        return F::zero();
    }
    let m = axes.len();
    let mut denom = F::one();
    for (k, &j) in axes.iter().enumerate() {
        denom = denom * g[j].clone() * F::from_i64(k as i64 + 2);
    }
    let mut acc = F::zero();
    for mask in 0..(1u32 << m) {
        let mut l = F::zero();
        let mut neg = false;
        for (b, &j) in axes.iter().enumerate() {
            let c = if mask >> b & 1 == 1 {
                hi[j].clone()
            } else {
                neg = !neg;
                lo[j].clone()
            };
            l = l + g[j].clone() * c;
        }
        let mut p = pos(l.clone());
        let mut q = pos(-l);
        let mut pp = F::one();
        let mut qq = F::one();
        for _ in 0..=m {
            pp = pp * p.clone();
            qq = qq * q.clone();
        }
        p = pp;
        q = qq;
        // max(-L,0) integrates with slope -g_j on every axis: sign (-1)^m
        let q = if m % 2 == 1 { -q } else { q };
        let term = p + q;
        acc = if neg { acc - term } else { acc + term };
    }
    width * acc / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn box_integral_constant_sign() {
        // ∫_{[1,3]×[0,2]} (a + 2c) = 2·2·(2 + 2) = 16
        let v = abs_linear_box_integral(&[r(1, 1), r(2, 1)], &[r(1, 1), r(0, 1)], &[r(3, 1), r(2, 1)]);
        assert_eq!(v, r(16, 1));
    }

    #[test]
    fn box_integral_sign_change() {
        // ∫_{-1}^{2} |c| dc = 1/2 + 2 = 5/2
        assert_eq!(abs_linear_box_integral(&[r(1, 1)], &[r(-1, 1)], &[r(2, 1)]), r(5, 2));
        // ∫∫_{[-1,1]²} |a - c| = 8/3
        let v = abs_linear_box_integral(&[r(1, 1), r(-1, 1)], &[r(-1, 1), r(-1, 1)], &[r(1, 1), r(1, 1)]);
        assert_eq!(v, r(8, 3));
    }
}
