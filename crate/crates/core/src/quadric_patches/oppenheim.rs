use std::cmp::Ordering;

use serde::Serialize;

use super::datum::{is_lt, plane_discriminant};
use crate::error::{Error, Result};
use crate::exactlin::{dot, Field, Matrix};
use crate::numeric::{is_primitive, subdivide_boxes, Ball};
use crate::quadforms::QuadraticForm;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OppenheimWitness {
    pub x: Vec<i64>,
    /// Sup-norm of `x`.
    pub q_found: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OppenheimResult {
    pub witness: Option<OppenheimWitness>,
    /// Discriminant of `P` on `ker A`; zero means the plane is tangent.
    pub tangency_discriminant: Option<f64>,
    pub searched_up_to: i64,
}

fn iv_sqr(b: Ball) -> Ball {
    let (lo, hi) = (b.lo(), b.hi());
    if lo >= 0.0 || hi <= 0.0 {
        let (a, c) = (lo * lo, hi * hi);
        Ball::from_interval(a.min(c) * (1.0 - 4.0 * f64::EPSILON), a.max(c) * (1.0 + 4.0 * f64::EPSILON))
    } else {
        Ball::from_interval(0.0, lo.abs().max(hi).powi(2) * (1.0 + 4.0 * f64::EPSILON))
    }
}

fn sup_norm(x: &[i64]) -> i64 {
    x.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// Smallest sup-norm over the integer box.
fn box_min_norm(lo: &[i64], hi: &[i64]) -> i64 {
    lo.iter().zip(hi).map(|(&a, &b)| if a <= 0 && b >= 0 { 0 } else { a.abs().min(b.abs()) }).max().unwrap_or(0)
}

/// First primitive `x` (by sup-norm, then lexicographically) with
/// `(P(x), A_1(x), …, A_{n−2}(x))` in the open box, `|x|_∞ ≤ q_max`.
///
/// The search doubles the radius `H` and runs a branch-and-bound over
/// `[−H, H]ⁿ` with interval enclosures of `P` and the `A_i`, deciding
/// undecided points exactly.
pub fn oppenheim_search<F: Field>(p: &QuadraticForm<F>, a: &[Vec<F>], b: &[(F, F)], q_max: i64) -> Result<OppenheimResult> {
    let n = p.dim();
    if a.len() + 2 != n || a.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n - 2, found: a.len() });
    }
    if b.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, found: b.len() });
    }
    let amat = Matrix::from_rows(a.to_vec())?;
    if amat.rank(1e-12) != n - 2 {
        return Err(Error::InvalidInput("constraint forms are linearly dependent".into()));
    }
    let ker = amat.kernel(1e-12);
    let tangency_discriminant = (ker.len() == 2).then(|| plane_discriminant(p, &ker[0], &ker[1]).to_f64());

    let s = p.matrix();
    let sb: Vec<Vec<Ball>> = (0..n).map(|i| (0..n).map(|j| Ball::of(s.get(i, j))).collect()).collect();
    let ab: Vec<Vec<Ball>> = a.iter().map(|row| row.iter().map(Ball::of).collect()).collect();
    let bb: Vec<(Ball, Ball)> = b.iter().map(|(l, h)| (Ball::of(l), Ball::of(h))).collect();

    let enclose = |x: &[Ball]| -> Vec<Ball> {
        let mut pv = Ball::ZERO;
        for i in 0..n {
            pv = pv + sb[i][i] * iv_sqr(x[i]);
            for j in i + 1..n {
                pv = pv + sb[i][j] * Ball::exact(2.0) * x[i] * x[j];
            }
        }
        let mut out = vec![pv];
        for row in &ab {
            let mut acc = Ball::ZERO;
            for (c, xi) in row.iter().zip(x) {
                acc = acc + *c * *xi;
            }
            out.push(acc);
        }
        out
    };
    // -1 certainly outside, 1 certainly inside, 0 undecided
    let classify = |vals: &[Ball]| -> i32 {
        let mut inside = true;
        for (v, (l, h)) in vals.iter().zip(&bb) {
            if v.hi() <= l.lo() || v.lo() >= h.hi() {
                return -1;
            }
            if !((*v - *l).is_positive() && (*h - *v).is_positive()) {
                inside = false;
            }
        }
        if inside {
            1
        } else {
            0
        }
    };
    let exact_inside = |x: &[i64]| -> bool {
        let xf: Vec<F> = x.iter().map(|&v| F::from_i64(v)).collect();
        let mut vals = vec![p.eval(&xf)];
        vals.extend(a.iter().map(|row| dot(row, &xf)));
        vals.iter().zip(b).all(|(v, (l, h))| is_lt(l, v) && is_lt(v, h))
    };

    let mut h = 1i64;
    loop {
        let h_now = h.min(q_max.max(1));
        let lo = vec![-h_now; n];
        let hi = vec![h_now; n];
        let mut best: Option<Vec<i64>> = None;
        {
            let best_ref = &mut best;
            let best_norm = std::cell::Cell::new(i64::MAX);
            subdivide_boxes(
                &lo,
                &hi,
                &mut |l, u| {
                    if box_min_norm(l, u) > best_norm.get() {
                        return false;
                    }
                    let xb: Vec<Ball> = l.iter().zip(u).map(|(&x0, &x1)| Ball::from_interval(x0 as f64, x1 as f64)).collect();
                    classify(&enclose(&xb)) >= 0
                },
                &mut |x| {
                    if x.iter().all(|&v| v == 0) || !is_primitive(x) {
                        return;
                    }
                    let xb: Vec<Ball> = x.iter().map(|&v| Ball::exact(v as f64)).collect();
                    let ok = match classify(&enclose(&xb)) {
                        1 => true,
                        0 => exact_inside(x),
                        _ => false,
                    };
                    if !ok {
                        return;
                    }
                    let norm = sup_norm(x);
                    let better = match best_ref.as_ref() {
                        None => true,
                        Some(bx) => (norm, x).cmp(&(sup_norm(bx), bx.as_slice())) == Ordering::Less,
                    };
                    if better {
                        best_norm.set(norm);
                        *best_ref = Some(x.to_vec());
                    }
                },
            );
        }
        if let Some(x) = best {
            let q_found = sup_norm(&x);
            return Ok(OppenheimResult { witness: Some(OppenheimWitness { x, q_found }), tangency_discriminant, searched_up_to: h_now });
        }
        if h_now >= q_max {
            return Ok(OppenheimResult { witness: None, tangency_discriminant, searched_up_to: h_now });
        }
        h = h.saturating_mul(2);
    }
}
