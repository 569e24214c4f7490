use std::cmp::Ordering;

use rayon::prelude::*;

use super::region::ThickenedParabolaRegion;
use crate::error::{Error, Result};
use crate::exactlin::Field;
use crate::numeric::{is_primitive, solve_line, subdivide_boxes, Ball, BallPoly, LinearBall};

/// Default guard on the number of bounding-box points brute force may visit.
pub const BRUTE_FORCE_LIMIT: f64 = 1e8;

/// Primitive points of the solid by scanning its bounding box.
pub fn enumerate_bruteforce<F: Field>(r: &ThickenedParabolaRegion<F>, limit: f64) -> Result<Vec<Vec<i64>>> {
    let (lo, hi) = r.bounding_box();
    let points: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as f64).product();
    if points > limit {
        return Err(Error::RegionTooLarge { points, limit });
    }
    let n = lo.len();
    let mut out = Vec::new();
    let mut x = lo.clone();
    loop {
        if r.contains(&x) && is_primitive(&x) {
            out.push(x.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
        }
    }
}

/// Ball-arithmetic data for the per-line constraints.
struct LineSystem {
    k: usize,
    d: LinearBall,
    n: LinearBall,
    /// `ℓ_j(x)`, `ℓ_j(w·x)`, `ℓ_j(w²·x)` for each base coordinate `j`.
    ell: Vec<[LinearBall; 3]>,
    lo: Vec<Ball>,
    hi: Vec<Ball>,
    t0: Ball,
    t1: Ball,
}

impl LineSystem {
    fn new<F: Field>(r: &ThickenedParabolaRegion<F>, k: usize) -> Self {
        let g = r.generator();
        let n = r.dim();
        let zero = F::zero();
        let coords = g.coordinate_map();
        let w = g.matrix();
        let w2 = g.square();
        let ell = (0..n - 1)
            .map(|j| {
                let row = coords.row(j);
                [
                    LinearBall::from_field(row, &zero),
                    LinearBall::from_field(&w.vec_mul(row), &zero),
                    LinearBall::from_field(&w2.vec_mul(row), &zero),
                ]
            })
            .collect();
        Self {
            k,
            d: LinearBall::from_field(g.d_form(), &zero),
            n: LinearBall::from_field(g.y_slicer(), &zero),
            ell,
            lo: r.box_lo().iter().map(Ball::of).collect(),
            hi: r.box_hi().iter().map(Ball::of).collect(),
            t0: Ball::of(r.t()),
            t1: Ball::of(&r.t_end()),
        }
    }

    /// Constraints along `base + s·e_k`, each meaning `p(s) ≥ 0` or `p(s) > 0`.
    fn polys(&self, base: &[i64]) -> Vec<BallPoly> {
        let d = self.d.on_line(base, self.k);
        let nn = self.n.on_line(base, self.k);
        let dd = d.mul(&d);
        let nd = nn.mul(&d);
        let half_n2 = nn.mul(&nn).scale(Ball::exact(0.5));
        let mut out = Vec::with_capacity(3 + 2 * self.ell.len());
        out.push(nn.sub(&d.scale(self.t0)).mul(&d));
        out.push(d.scale(self.t1).sub(&nn).mul(&d));
        out.push(dd.clone());
        for (j, [l0, l1, l2]) in self.ell.iter().enumerate() {
            let p = dd
                .mul(&l0.on_line(base, self.k))
                .sub(&nd.mul(&l1.on_line(base, self.k)))
                .add(&half_n2.mul(&l2.on_line(base, self.k)));
            out.push(p.sub(&dd.scale(self.lo[j])));
            out.push(dd.scale(self.hi[j]).sub(&p));
        }
        out
    }
}

/// The standard axis with the largest `|⟨v2, e_k⟩|` (first on ties).
pub fn growth_axis<F: Field>(r: &ThickenedParabolaRegion<F>) -> usize {
    let v2 = r.generator().v2();
    let mut best = 0;
    for i in 1..v2.len() {
        if v2[i].abs().cmp_to(&v2[best].abs()) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Primitive points of the solid, line by line along the growth axis.
///
/// Lines are pruned with certified linear necessary conditions: the value
/// `D = ⟨w·x, y⟩` is constant along orbits, so it ranges over its values on
/// the box, and when `D` has one sign the time window is a cone in `(D, N)`.
/// On each surviving line the constraints are polynomials of degree at most
/// 3 in the free coordinate, settled by ball branch-and-bound with an exact
/// membership fallback at undecided points.
pub fn enumerate_sliced<F: Field>(r: &ThickenedParabolaRegion<F>) -> Vec<Vec<i64>> {
    let n = r.dim();
    let k = growth_axis(r);
    let sys = LineSystem::new(r, k);
    let (blo, bhi) = r.bounding_box();

    // D range over the box and the sign-dependent time cone
    let d_box = {
        let g = r.generator();
        let coef: Vec<Ball> = g.l_w_basis().iter().map(|b| Ball::of(&g.d_value(b))).collect();
        let lo: Vec<f64> = r.box_lo().iter().map(|v| Ball::of(v).lo()).collect();
        let hi: Vec<f64> = r.box_hi().iter().map(|v| Ball::of(v).hi()).collect();
        LinearBall::new(coef, Ball::ZERO).range(&lo, &hi)
    };
    let mut linear: Vec<LinearBall> = vec![
        sys.d.sub(&LinearBall::new(vec![Ball::ZERO; n], Ball::exact(d_box.lo()))),
        LinearBall::new(vec![Ball::ZERO; n], Ball::exact(d_box.hi())).sub(&sys.d),
    ];
    if d_box.is_positive() {
        linear.push(sys.n.sub(&sys.d.scale(sys.t0)));
        linear.push(sys.d.scale(sys.t1).sub(&sys.n));
    } else if d_box.is_negative() {
        linear.push(sys.d.scale(sys.t0).sub(&sys.n));
        linear.push(sys.n.sub(&sys.d.scale(sys.t1)));
    }

    let others: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let olo: Vec<i64> = others.iter().map(|&i| blo[i]).collect();
    let ohi: Vec<i64> = others.iter().map(|&i| bhi[i]).collect();
    let mut flo = vec![0.0; n];
    let mut fhi = vec![0.0; n];
    flo[k] = blo[k] as f64;
    fhi[k] = bhi[k] as f64;
    let mut bases: Vec<Vec<i64>> = Vec::new();
    subdivide_boxes(
        &olo,
        &ohi,
        &mut |lo, hi| {
            for (p, &i) in others.iter().enumerate() {
                flo[i] = lo[p] as f64;
                fhi[i] = hi[p] as f64;
            }
            !linear.iter().any(|c| c.range(&flo, &fhi).is_negative())
        },
        &mut |p| {
            let mut x = vec![0i64; n];
            for (q, &i) in others.iter().enumerate() {
                x[i] = p[q];
            }
            bases.push(x);
        },
    );

    let mut out: Vec<Vec<i64>> = bases
        .par_chunks(64)
        .flat_map_iter(|chunk| {
            let mut found = Vec::new();
            for base in chunk {
                let polys = sys.polys(base);
                let mut ss = Vec::new();
                let mut exact = |s: i64| {
                    let mut x = base.clone();
                    x[k] = s;
                    r.contains(&x)
                };
                solve_line(&polys, blo[k], bhi[k], &mut exact, &mut ss);
                for s in ss {
                    let mut x = base.clone();
                    x[k] = s;
                    if is_primitive(&x) {
                        found.push(x);
                    }
                }
            }
            found
        })
        .collect();
    out.sort_unstable();
    out
}
