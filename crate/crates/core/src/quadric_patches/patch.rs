use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::datum::{is_lt, QuadricDatum};
use crate::error::{Error, Result};
use crate::exactlin::Field;
use crate::numeric::{adaptive_simpson, is_primitive, solve_line, subdivide_boxes, zeta, Ball, BallPoly, LinearBall};
use crate::report::CountReport;

/// Default seed of the Monte Carlo volume estimate.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Points `x = q·(z + c2·e + Σ c_i·e_i)` with
/// `(R(x), q/Q, c2·√Q, c3·Q, …, cn·Q)` in the half-open windows.
#[derive(Clone, Debug)]
pub struct QuadricPatchSpec<F> {
    pub datum: QuadricDatum<F>,
    pub q: F,
    /// `n + 1` windows `[a_i, b_i)`.
    pub windows: Vec<(F, F)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMethod {
    #[serde(alias = "monte-carlo")]
    MonteCarlo,
    Quadrature,
}

/// `u·√Q` compared with `a`, exactly.
fn cmp_sqrt_scaled<F: Field>(u: &F, q: &F, a: &F) -> Ordering {
    let su = u.signum();
    let sa = a.signum();
    match (su, sa) {
        (Ordering::Less, Ordering::Equal | Ordering::Greater) => Ordering::Less,
        (Ordering::Equal, _) => Ordering::Equal.cmp(&sa),
        (Ordering::Greater, Ordering::Less | Ordering::Equal) => Ordering::Greater,
        (Ordering::Greater, Ordering::Greater) => (u.square() * q.clone()).cmp_to(&a.square()),
        (Ordering::Less, Ordering::Less) => a.square().cmp_to(&(u.square() * q.clone())),
    }
}

impl<F: Field> QuadricPatchSpec<F> {
    pub fn new(datum: QuadricDatum<F>, q: F, windows: Vec<(F, F)>) -> Result<Self> {
        let n = datum.dim();
        if windows.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, found: windows.len() });
        }
        if windows.iter().any(|(a, b)| is_lt(b, a)) {
            return Err(Error::InvalidInput("window with b < a".into()));
        }
        if q.cmp_to(&F::one()) != Ordering::Greater {
            return Err(Error::InvalidInput("Q must exceed 1".into()));
        }
        Ok(Self { datum, q, windows })
    }

    pub fn dim(&self) -> usize {
        self.datum.dim()
    }

    /// Largest window endpoint magnitude (the `C` of the windows).
    pub fn window_bound(&self) -> f64 {
        self.windows.iter().flat_map(|(a, b)| [a.magnitude(), b.magnitude()]).fold(0.0, f64::max)
    }

    pub fn contains_field(&self, x: &[F]) -> bool {
        let n = self.dim();
        let kappa = self.datum.basis_inv().mul_vec(x);
        let q = &kappa[0];
        if q.is_zero() {
            return false;
        }
        let inside = |v: &F, w: &(F, F)| !is_lt(v, &w.0) && is_lt(v, &w.1);
        if !inside(&self.datum.form().eval(x), &self.windows[0]) {
            return false;
        }
        if !inside(&(q.clone() / self.q.clone()), &self.windows[1]) {
            return false;
        }
        let c2 = kappa[1].clone() / q.clone();
        let (a2, b2) = &self.windows[2];
        if cmp_sqrt_scaled(&c2, &self.q, a2) == Ordering::Less || cmp_sqrt_scaled(&c2, &self.q, b2) != Ordering::Less {
            return false;
        }
        (2..n).all(|i| inside(&(kappa[i].clone() / q.clone() * self.q.clone()), &self.windows[i + 1]))
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let xf: Vec<F> = x.iter().map(|&v| F::from_i64(v)).collect();
        self.contains_field(&xf)
    }

    /// Ranges of `q` and each `c_i` implied by the windows.
    fn coordinate_ranges(&self) -> Vec<(f64, f64)> {
        let qf = self.q.to_f64();
        let n = self.dim();
        let mut out = vec![(self.windows[1].0.to_f64() * qf, self.windows[1].1.to_f64() * qf)];
        out.push((self.windows[2].0.to_f64() / qf.sqrt(), self.windows[2].1.to_f64() / qf.sqrt()));
        for i in 2..n {
            out.push((self.windows[i + 1].0.to_f64() / qf, self.windows[i + 1].1.to_f64() / qf));
        }
        out
    }

    /// Integer bounding box of the point set, from interval products `q·c_i`.
    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let n = self.dim();
        let ranges = self.coordinate_ranges();
        let basis = self.datum.basis();
        let qiv = Ball::from_interval(ranges[0].0, ranges[0].1);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = qiv * Ball::of(basis.get(j, 0));
            for (i, &(a, b)) in ranges.iter().enumerate().skip(1) {
                acc = acc + qiv * Ball::from_interval(a, b) * Ball::of(basis.get(j, i));
            }
            lo.push((acc.lo() - 1e-9 * (1.0 + acc.lo().abs())).floor() as i64);
            hi.push((acc.hi() + 1e-9 * (1.0 + acc.hi().abs())).ceil() as i64);
        }
        (lo, hi)
    }

    /// Primitive members by scanning the bounding box.
    pub fn enumerate_bruteforce(&self, limit: f64) -> Result<Vec<Vec<i64>>> {
        let (lo, hi) = self.bounding_box();
        let points: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as f64).product();
        if points > limit {
            return Err(Error::RegionTooLarge { points, limit });
        }
        let n = lo.len();
        let mut out = Vec::new();
        let mut x = lo.clone();
        loop {
            if self.contains(&x) && is_primitive(&x) {
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

    /// Primitive members, line by line along the axis best aligned with `z`.
    pub fn enumerate_sliced(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        let z = self.datum.z();
        let mut k = 0;
        for i in 1..n {
            if z[i].abs().cmp_to(&z[k].abs()) == Ordering::Greater {
                k = i;
            }
        }
        let (blo, bhi) = self.bounding_box();
        if blo.iter().zip(&bhi).any(|(a, b)| a > b) {
            return Vec::new();
        }
        let zero = F::zero();
        let binv = self.datum.basis_inv();
        let kap: Vec<LinearBall> = (0..n).map(|i| LinearBall::from_field(binv.row(i), &zero)).collect();
        let qb = Ball::of(&self.q);
        let sq = qb.sqrt();
        let win: Vec<(Ball, Ball)> = self.windows.iter().map(|(a, b)| (Ball::of(a), Ball::of(b))).collect();
        let s = self.datum.form().matrix();
        let sball: Vec<Vec<Ball>> = (0..n).map(|i| (0..n).map(|j| Ball::of(s.get(i, j))).collect()).collect();

        // certified linear necessary conditions for the line pruning
        let konst = |c: Ball| LinearBall::new(vec![Ball::ZERO; n], c);
        let mut linear = vec![kap[0].sub(&konst(win[1].0 * qb)), konst(win[1].1 * qb).sub(&kap[0])];
        let sign = if win[1].0.is_positive() {
            1.0
        } else if win[1].1.is_negative() {
            -1.0
        } else {
            0.0
        };
        if sign != 0.0 {
            let sg = Ball::exact(sign);
            linear.push(kap[1].scale(sq).sub(&kap[0].scale(win[2].0)).scale(sg));
            linear.push(kap[0].scale(win[2].1).sub(&kap[1].scale(sq)).scale(sg));
            for i in 2..n {
                linear.push(kap[i].scale(qb).sub(&kap[0].scale(win[i + 1].0)).scale(sg));
                linear.push(kap[0].scale(win[i + 1].1).sub(&kap[i].scale(qb)).scale(sg));
            }
        }

        let others: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let olo: Vec<i64> = others.iter().map(|&i| blo[i]).collect();
        let ohi: Vec<i64> = others.iter().map(|&i| bhi[i]).collect();
        let mut flo = vec![0.0; n];
        let mut fhi = vec![0.0; n];
        flo[k] = blo[k] as f64;
        fhi[k] = bhi[k] as f64;
        let mut bases = Vec::new();
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

        let line_polys = |base: &[i64]| -> Vec<BallPoly> {
            // R(base + s·e_k) = R(base) + 2s·(S·base)_k + s²·S_kk
            let mut r0 = Ball::ZERO;
            let mut r1 = Ball::ZERO;
            for i in 0..n {
                if base[i] == 0 {
                    continue;
                }
                let bi = Ball::exact(base[i] as f64);
                r1 = r1 + sball[k][i] * bi;
                for j in 0..n {
                    if base[j] != 0 {
                        r0 = r0 + sball[i][j] * bi * Ball::exact(base[j] as f64);
                    }
                }
            }
            let rp = BallPoly { coef: vec![r0, r1 * Ball::exact(2.0), sball[k][k]] };
            let kp: Vec<BallPoly> = kap.iter().map(|l| l.on_line(base, k)).collect();
            let q = &kp[0];
            let mut out = vec![
                rp.sub(&BallPoly::constant(win[0].0)),
                BallPoly::constant(win[0].1).sub(&rp),
                q.sub(&BallPoly::constant(win[1].0 * qb)),
                BallPoly::constant(win[1].1 * qb).sub(q),
                q.mul(q),
                kp[1].scale(sq).sub(&q.scale(win[2].0)).mul(q),
                q.scale(win[2].1).sub(&kp[1].scale(sq)).mul(q),
            ];
            for i in 2..n {
                out.push(kp[i].scale(qb).sub(&q.scale(win[i + 1].0)).mul(q));
                out.push(q.scale(win[i + 1].1).sub(&kp[i].scale(qb)).mul(q));
            }
            out
        };

        let mut out: Vec<Vec<i64>> = bases
            .par_chunks(64)
            .flat_map_iter(|chunk| {
                let mut found = Vec::new();
                for base in chunk {
                    let polys = line_polys(base);
                    let mut ss = Vec::new();
                    let mut exact = |s: i64| {
                        let mut x = base.clone();
                        x[k] = s;
                        self.contains(&x)
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

    /// `S′ = Bᵀ·S·B`, so `R(z + Σ c_a·b_a) = Σ cc_a·cc_b·S′_ab` with `cc_0 = 1`.
    fn rho_matrix(&self) -> Vec<Vec<f64>> {
        let b = self.datum.basis();
        let sp = b.transpose().mul(self.datum.form().matrix()).mul(b);
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| sp.get(i, j).to_f64()).collect()).collect()
    }

    /// Coordinate integrated in closed form: the `c_j` with the largest
    /// `|⟨z, b_j⟩_R|`, so that `ρ` is far from flat in it.
    fn solved_axis(sp: &[Vec<f64>]) -> usize {
        let mut best = 1;
        for j in 2..sp.len() {
            if sp[0][j].abs() > sp[0][best].abs() {
                best = j;
            }
        }
        best
    }

    fn det_factor(&self) -> f64 {
        self.datum.basis().determinant().to_f64().abs()
    }

    /// `|q|^{n−1}` times the length of `{c_j : q²·ρ ∈ [a0, b0)}` inside its
    /// window, at `u = (q, remaining c's)`.
    fn integrand(&self, u: &[f64], sp: &[Vec<f64>], j: usize, ranges: &[(f64, f64)]) -> f64 {
        let n = self.dim();
        let q = u[0];
        if q == 0.0 {
            return 0.0;
        }
        let mut cc = vec![1.0; n];
        let mut it = u[1..].iter();
        for (a, c) in cc.iter_mut().enumerate().skip(1) {
            if a != j {
                *c = *it.next().expect("free coordinate");
            }
        }
        cc[j] = 0.0;
        // ρ = α·c_j² + β·c_j + γ
        let alpha = sp[j][j];
        let beta = 2.0 * (0..n).filter(|&a| a != j).map(|a| cc[a] * sp[a][j]).sum::<f64>();
        let mut gamma = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != j && b != j {
                    gamma += cc[a] * cc[b] * sp[a][b];
                }
            }
        }
        let (a0, b0) = (self.windows[0].0.to_f64(), self.windows[0].1.to_f64());
        let (lo, hi) = ranges[j];
        let q2 = q * q;
        let len = measure_ge(alpha, beta, gamma - a0 / q2, lo, hi) - measure_ge(alpha, beta, gamma - b0 / q2, lo, hi);
        q.abs().powi(n as i32 - 1) * len.max(0.0)
    }

    /// Monte Carlo over `q` and all `c` but one, the last `c` integrated in
    /// closed form. Returns `(volume, relative standard error, samples)`.
    pub fn volume_monte_carlo(&self, seed: u64, rel_target: f64, max_samples: u64) -> (f64, f64, u64) {
        let sp = self.rho_matrix();
        let j = Self::solved_axis(&sp);
        let ranges = self.coordinate_ranges();
        let free: Vec<(f64, f64)> = (0..ranges.len()).filter(|&a| a != j).map(|a| ranges[a]).collect();
        let box_vol: f64 = free.iter().map(|(a, b)| b - a).product();
        if box_vol <= 0.0 || ranges[j].1 <= ranges[j].0 || self.windows[0].1.to_f64() <= self.windows[0].0.to_f64() {
            return (0.0, 0.0, 0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sum, mut sum2, mut count) = (0.0f64, 0.0f64, 0u64);
        let batch = 10_000;
        let mut u = vec![0.0; free.len()];
        loop {
            for _ in 0..batch {
                for (v, &(a, b)) in u.iter_mut().zip(&free) {
                    *v = a + (b - a) * rng.random::<f64>();
                }
                let f = self.integrand(&u, &sp, j, &ranges);
                sum += f;
                sum2 += f * f;
            }
            count += batch;
            let mean = sum / count as f64;
            let var = (sum2 / count as f64 - mean * mean).max(0.0);
            let rel = if mean > 0.0 { (var / count as f64).sqrt() / mean } else { 0.0 };
            if (mean > 0.0 && rel <= rel_target) || count >= max_samples || (mean == 0.0 && count >= 100_000) {
                return (mean * box_vol * self.det_factor(), rel, count);
            }
        }
    }

    /// Iterated adaptive Simpson over the two free coordinates; `n = 3` only.
    pub fn volume_quadrature(&self, rel_tol: f64) -> Result<f64> {
        if self.dim() != 3 {
            return Err(Error::InvalidInput("quadrature volume is implemented for n = 3".into()));
        }
        let sp = self.rho_matrix();
        let j = Self::solved_axis(&sp);
        let ranges = self.coordinate_ranges();
        let other = if j == 1 { 2 } else { 1 };
        let (q0, q1) = ranges[0];
        let (c0, c1) = ranges[other];
        if q1 <= q0 || c1 <= c0 || ranges[j].1 <= ranges[j].0 {
            return Ok(0.0);
        }
        let scale = (q1 - q0) * (c1 - c0) * (ranges[j].1 - ranges[j].0) * q0.abs().max(q1.abs()).powi(2);
        let tol = rel_tol * scale;
        let inner = |q: f64| adaptive_simpson(&|c| self.integrand(&[q, c], &sp, j, &ranges), c0, c1, tol / (q1 - q0), 40);
        Ok(adaptive_simpson(&inner, q0, q1, tol, 40) * self.det_factor())
    }

    pub fn params(&self) -> Value {
        json!({
            "mode": F::MODE,
            "Q": self.q.to_scalar(),
            "form": self.datum.form(),
            "z": self.datum.z().iter().map(Field::to_scalar).collect::<Vec<_>>(),
            "e": self.datum.e().iter().map(Field::to_scalar).collect::<Vec<_>>(),
            "extra": self.datum.extra().iter().map(|v| v.iter().map(Field::to_scalar).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "windows": self.windows.iter().map(|(a, b)| [a.to_scalar(), b.to_scalar()]).collect::<Vec<_>>(),
            "window_bound": self.window_bound(),
        })
    }
}

/// Sliced count against `ζ(n)⁻¹·vol`, also reporting `count / Q^{1/2}`.
pub fn patch_count<F: Field>(spec: &QuadricPatchSpec<F>, method: VolumeMethod, seed: u64) -> Result<CountReport> {
    let points = spec.enumerate_sliced();
    let (volume, extra) = match method {
        VolumeMethod::MonteCarlo => {
            let (v, rel, samples) = spec.volume_monte_carlo(seed, 0.01, 20_000_000);
            (v, json!({"method": "monte-carlo", "relative_error": rel, "samples": samples}))
        }
        VolumeMethod::Quadrature => (spec.volume_quadrature(1e-7)?, json!({"method": "quadrature"})),
    };
    let n = spec.dim();
    let predicted = volume / zeta(n as u32);
    let mut rep = CountReport::new(points.len() as u64, volume, predicted, spec.params())
        .with_extra("volume_estimate", extra)
        .with_extra("count_over_sqrt_q", points.len() as f64 / spec.q.to_f64().sqrt());
    if method == VolumeMethod::MonteCarlo {
        rep.seed = Some(seed);
    }
    Ok(rep)
}

/// Length of `{c ∈ [lo, hi] : α·c² + β·c + γ ≥ 0}`.
fn measure_ge(alpha: f64, beta: f64, gamma: f64, lo: f64, hi: f64) -> f64 {
    let clip = |a: f64, b: f64| (b.min(hi) - a.max(lo)).max(0.0);
    let width = hi - lo;
    if alpha == 0.0 {
        if beta == 0.0 {
            return if gamma >= 0.0 { width } else { 0.0 };
        }
        let root = -gamma / beta;
        return if beta > 0.0 { clip(root, hi) } else { clip(lo, root) };
    }
    let disc = beta * beta - 4.0 * alpha * gamma;
    if disc < 0.0 {
        return if alpha > 0.0 { width } else { 0.0 };
    }
    // numerically stable roots
    let t = -0.5 * (beta + beta.signum() * disc.sqrt());
    let (mut r1, mut r2) = if t == 0.0 { (0.0, 0.0) } else { (t / alpha, gamma / t) };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    if alpha > 0.0 {
        clip(lo, r1) + clip(r2, hi)
    } else {
        clip(r1, r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_superlevel_lengths() {
        // c² − 1 ≥ 0 on [−2, 3]: [−2,−1] ∪ [1,3]
        assert!((measure_ge(1.0, 0.0, -1.0, -2.0, 3.0) - 3.0).abs() < 1e-12);
        // 1 − c² ≥ 0 on [0, 5]: [0, 1]
        assert!((measure_ge(-1.0, 0.0, 1.0, 0.0, 5.0) - 1.0).abs() < 1e-12);
        // 2c − 1 ≥ 0 on [0, 1]
        assert!((measure_ge(0.0, 2.0, -1.0, 0.0, 1.0) - 0.5).abs() < 1e-12);
        // tiny curvature, dominant slope
        assert!((measure_ge(1e-12, 1.0, -0.25, 0.0, 1.0) - 0.75).abs() < 1e-9);
    }
}
