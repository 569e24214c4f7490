use serde::Serialize;

use crate::exactlin::{Field, NilpotentGenerator};
use crate::numeric::{adaptive_simpson, is_primitive};

/// Tent function `f(x) = max(0, 1 − |x − center| / radius)`, Lipschitz
/// with constant `1 / radius` and supported in the closed radius ball.
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl LipschitzBump {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius: radius.max(0.0) }
    }

    pub fn lip(&self) -> f64 {
        if self.radius > 0.0 {
            1.0 / self.radius
        } else {
            f64::INFINITY
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.radius <= 0.0 {
            return 0.0;
        }
        let d = x.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        (1.0 - d / self.radius).max(0.0)
    }

    /// `∫ f = V_n·rⁿ/(n+1)` with `V_n` the unit-ball volume.
    pub fn integral(&self) -> f64 {
        let n = self.center.len() as f64;
        let vn = std::f64::consts::PI.powf(n / 2.0) / gamma_half_int(n / 2.0 + 1.0);
        vn * self.radius.powf(n) / (n + 1.0)
    }
}

/// `Γ(x)` for `x` a positive integer or half-integer.
fn gamma_half_int(x: f64) -> f64 {
    if x == 0.5 {
        return std::f64::consts::PI.sqrt();
    }
    if x == 1.0 {
        return 1.0;
    }
    (x - 1.0) * gamma_half_int(x - 1.0)
}

/// Integer points `v` with `|A·v − c| ≤ r`, by Fincke–Pohst enumeration on a
/// QR factorization of `A`.
pub fn ellipsoid_points(a: &[Vec<f64>], c: &[f64], r: f64) -> Vec<Vec<i64>> {
    let n = c.len();
    // modified Gram–Schmidt twice on the columns of A
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[i][j]).collect()).collect();
    let mut rm = vec![vec![0.0; n]; n];
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let p: f64 = (0..n).map(|l| q[i][l] * q[j][l]).sum();
                rm[i][j] += p;
                for l in 0..n {
                    q[j][l] -= p * q[i][l];
                }
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        rm[j][j] = norm;
        if norm > 0.0 {
            for l in 0..n {
                q[j][l] /= norm;
            }
        }
    }
    // |A v − c| = |R v − Qᵀc|
    let b: Vec<f64> = (0..n).map(|i| (0..n).map(|l| q[i][l] * c[l]).sum()).collect();
    let r2 = (r * (1.0 + 1e-9) + 1e-9).powi(2);
    let mut out = Vec::new();
    let mut v = vec![0i64; n];
    fp_rec(&rm, &b, n, r2, &mut v, &mut out);
    out.sort_unstable();
    out
}

fn fp_rec(rm: &[Vec<f64>], b: &[f64], level: usize, budget: f64, v: &mut [i64], out: &mut Vec<Vec<i64>>) {
    if level == 0 {
        out.push(v.to_vec());
        return;
    }
    let i = level - 1;
    let n = v.len();
    let rest: f64 = (i + 1..n).map(|j| rm[i][j] * v[j] as f64).sum();
    let target = b[i] - rest;
    let d = rm[i][i];
    if d <= 0.0 {
        return;
    }
    let half = budget.max(0.0).sqrt() / d;
    let center = target / d;
    let lo = (center - half - 1e-9 * (1.0 + center.abs())).ceil() as i64;
    let hi = (center + half + 1e-9 * (1.0 + center.abs())).floor() as i64;
    for x in lo..=hi {
        let e = d * x as f64 - target;
        v[i] = x;
        fp_rec(rm, b, i, budget - e * e, v, out);
    }
    v[i] = 0;
}

/// `Σ_{v primitive} f(exp(t·w)·v)` at one time.
pub fn orbit_sum<F: Field>(g: &NilpotentGenerator<F>, f: &LipschitzBump, t: f64) -> f64 {
    if f.radius <= 0.0 {
        return 0.0;
    }
    let n = g.dim();
    let w = g.matrix().map(Field::to_f64);
    let w2 = g.square().map(Field::to_f64);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id + t * w.get(i, j) + 0.5 * t * t * w2.get(i, j)
                })
                .collect()
        })
        .collect();
    let mut sum = 0.0;
    for v in ellipsoid_points(&a, &f.center, f.radius) {
        if !is_primitive(&v) {
            continue;
        }
        let x: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * v[j] as f64).sum()).collect();
        sum += f.eval(&x);
    }
    sum
}

/// `∫_T^{βT} Σ_{v primitive} f(exp(t·w)·v) dt` by adaptive Simpson.
pub fn time_average<F: Field>(g: &NilpotentGenerator<F>, f: &LipschitzBump, t: f64, beta: f64, tol: f64) -> f64 {
    if f.radius <= 0.0 {
        return 0.0;
    }
    adaptive_simpson(&|s| orbit_sum(g, f, s), t, beta * t, tol, 18)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsoid_matches_scan() {
        let a = vec![vec![1.0, 0.5, 0.0], vec![0.0, 2.0, 0.3], vec![0.1, 0.0, 0.7]];
        let c = vec![0.3, -0.2, 1.1];
        let r = 2.5;
        let got = ellipsoid_points(&a, &c, r);
        let mut want = Vec::new();
        for x in -20i64..=20 {
            for y in -20i64..=20 {
                for z in -20i64..=20 {
                    let v = [x as f64, y as f64, z as f64];
                    let d: f64 = (0..3).map(|i| ((0..3).map(|j| a[i][j] * v[j]).sum::<f64>() - c[i]).powi(2)).sum();
                    if d <= r * r {
                        want.push(vec![x, y, z]);
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn tent_integral_in_3d() {
        // V_3 r³ / 4 = π r³ / 3
        let f = LipschitzBump::new(vec![0.0; 3], 2.0);
        assert!((f.integral() - std::f64::consts::PI * 8.0 / 3.0).abs() < 1e-12);
    }
}
