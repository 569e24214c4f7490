//! Decomposition of the thickened cone over a surface into parallel patch
//! cones, with an audit of the pieces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::monge::MongeSurface;
use crate::error::{Error, Result};

/// `(δ, Q)`-parallel patch: footprint `v + [0,δQ^{-1/2}) × [0,δQ^{-1})^{n−2}`
/// and vertical window `c ≤ y − F(x) < c + δQ^{-2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelPatch {
    pub delta: f64,
    pub q: f64,
    pub v: Vec<f64>,
    pub c: f64,
}

/// All patches with one scale `Q₁`, laid out on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct PatchShell {
    /// The shell covers `Q₁ ≤ q < q_hi`.
    pub q1: f64,
    pub q_hi: f64,
    pub steps: Vec<f64>,
    pub counts: Vec<u64>,
    pub slab: f64,
    pub slabs: u64,
}

impl PatchShell {
    pub fn len(&self) -> u64 {
        self.counts.iter().product::<u64>() * self.slabs
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchDecomposition {
    pub delta: f64,
    pub q: f64,
    pub eps: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shells: Vec<PatchShell>,
}

/// Lower end of shell `k`: `Q(1+δ)^{-(k+1)}`.
fn shell_lo(q: f64, delta: f64, k: usize) -> f64 {
    q * (1.0 + delta).powi(-(k as i32 + 1))
}

fn shell_hi(q: f64, delta: f64, k: usize) -> f64 {
    if k == 0 {
        q
    } else {
        shell_lo(q, delta, k - 1)
    }
}

// index of the half-open cell `[lo + i·step, lo + (i+1)·step)` holding `x`
fn cell(x: f64, lo: f64, step: f64, count: u64) -> Option<u64> {
    if x < lo {
        return None;
    }
    let mut i = ((x - lo) / step).floor() as i64;
    if i > 0 && x < lo + i as f64 * step {
        i -= 1;
    }
    if x >= lo + (i + 1) as f64 * step {
        i += 1;
    }
    (i >= 0 && (i as u64) < count).then_some(i as u64)
}

fn grid_count(lo: f64, hi: f64, step: f64) -> u64 {
    let mut k = ((hi - lo) / step).floor().max(0.0) as u64;
    while k > 0 && lo + k as f64 * step > hi {
        k -= 1;
    }
    k
}

impl PatchDecomposition {
    pub fn dim(&self) -> usize {
        self.lo.len() + 1
    }

    pub fn len(&self) -> u64 {
        self.shells.iter().map(PatchShell::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the cone `{(q, z) : 0 < q ≤ Q, z/q ∈ 𝓜_ε}` under the
    /// vertical thickening `|y − F(x)| ≤ ε`.
    pub fn cone_volume(&self) -> f64 {
        let n = self.dim() as i32;
        let area: f64 = self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product();
        2.0 * self.eps * area * self.q.powi(n + 1) / (n + 1) as f64
    }

    pub fn shell_patch_volume(&self, k: usize) -> f64 {
        let sh = &self.shells[k];
        let n = self.dim() as i32;
        let foot: f64 = sh.steps.iter().product();
        foot * sh.slab * (sh.q_hi.powi(n + 1) - sh.q1.powi(n + 1)) / (n + 1) as f64
    }

    pub fn covered_volume(&self) -> f64 {
        (0..self.shells.len()).map(|k| self.shell_patch_volume(k) * self.shells[k].len() as f64).sum()
    }

    /// Grid coordinates `(shell, cell indices, slab)` of patch `index`.
    pub fn coords(&self, mut index: u64) -> Option<(usize, Vec<u64>, u64)> {
        for (k, sh) in self.shells.iter().enumerate() {
            if index < sh.len() {
                let m = index % sh.slabs;
                index /= sh.slabs;
                let mut cells = vec![0; sh.counts.len()];
                for j in (0..sh.counts.len()).rev() {
                    cells[j] = index % sh.counts[j];
                    index /= sh.counts[j];
                }
                return Some((k, cells, m));
            }
            index -= sh.len();
        }
        None
    }

    fn index_of(&self, k: usize, cells: &[u64], m: u64) -> u64 {
        let base: u64 = self.shells[..k].iter().map(PatchShell::len).sum();
        let sh = &self.shells[k];
        let mut idx = 0;
        for (j, &c) in cells.iter().enumerate() {
            idx = idx * sh.counts[j] + c;
        }
        base + idx * sh.slabs + m
    }

    pub fn patch(&self, index: u64) -> Option<ParallelPatch> {
        let (k, cells, m) = self.coords(index)?;
        let sh = &self.shells[k];
        let v = cells.iter().enumerate().map(|(j, &i)| self.lo[j] + i as f64 * sh.steps[j]).collect();
        Some(ParallelPatch { delta: self.delta, q: sh.q1, v, c: -self.eps + m as f64 * sh.slab })
    }

    /// Box of patch `index` in `(q, x, t = y − F(x))` coordinates, half-open.
    pub fn patch_box(&self, index: u64) -> Option<Vec<(f64, f64)>> {
        let (k, cells, m) = self.coords(index)?;
        let sh = &self.shells[k];
        let mut b = vec![(sh.q1, sh.q_hi)];
        for (j, &i) in cells.iter().enumerate() {
            b.push((self.lo[j] + i as f64 * sh.steps[j], self.lo[j] + (i + 1) as f64 * sh.steps[j]));
        }
        b.push((-self.eps + m as f64 * sh.slab, -self.eps + (m + 1) as f64 * sh.slab));
        Some(b)
    }

    /// The patch whose cone contains `(q, x, y)` with `t = y − F(x)`.
    pub fn locate(&self, q: f64, x: &[f64], t: f64) -> Option<u64> {
        if !(q > 0.0 && q <= self.q) {
            return None;
        }
        let guess = ((self.q / q).ln() / (1.0 + self.delta).ln()).floor().max(0.0) as usize;
        let k = (guess.saturating_sub(1)..=guess + 1)
            .find(|&k| k < self.shells.len() && self.shells[k].q1 <= q && q < self.shells[k].q_hi)?;
        let sh = &self.shells[k];
        let cells = (0..x.len()).map(|j| cell(x[j], self.lo[j], sh.steps[j], sh.counts[j])).collect::<Option<Vec<u64>>>()?;
        let m = cell(t, -self.eps, sh.slab, sh.slabs)?;
        Some(self.index_of(k, &cells, m))
    }
}

fn in_box(b: &[(f64, f64)], p: &[f64]) -> bool {
    b.iter().zip(p).all(|(&(lo, hi), &v)| lo <= v && v < hi)
}

fn boxes_overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.iter().zip(b).all(|(&(l1, h1), &(l2, h2))| l1 < h2 && l2 < h1)
}

/// Tiles the thickened cone over `s` (vertical thickness `ε`, `q ≤ Q`) by
/// `(δ, Q₁)`-parallel patch cones, one shell `Q₁ ≤ q < (1+δ)Q₁` at a time
/// for `Q₁ ≥ δQ`. Footprints follow the coordinate axes with `x₁` as the
/// long side.
pub fn patch_decomposition(s: &MongeSurface, delta: f64, q: f64, eps: f64) -> Result<PatchDecomposition> {
    if !(delta > 0.0 && delta < 1.0) || !(q > 1.0) {
        return Err(Error::InvalidInput(format!("need 0 < delta < 1 and Q > 1, found delta = {delta}, Q = {q}")));
    }
    let (lo_eps, hi_eps) = (delta / (q * q), 1.0 / q);
    let slack = 1e-12;
    if !(eps >= lo_eps * (1.0 - slack) && eps <= hi_eps * (1.0 + slack)) {
        return Err(Error::BadEpsilonRange { eps, lo: lo_eps, hi: hi_eps });
    }
    let (lo, hi): (Vec<f64>, Vec<f64>) = s.domain_f64().into_iter().unzip();
    let mut shells = Vec::new();
    let mut k = 0;
    loop {
        let q1 = shell_lo(q, delta, k);
        if q1 < delta * q {
            break;
        }
        let steps: Vec<f64> = (0..lo.len()).map(|j| if j == 0 { delta / q1.sqrt() } else { delta / q1 }).collect();
        let counts = (0..lo.len()).map(|j| grid_count(lo[j], hi[j], steps[j])).collect();
        let slab = delta / (q1 * q1);
        let slabs = grid_count(-eps, eps, slab);
        shells.push(PatchShell { q1, q_hi: shell_hi(q, delta, k), steps, counts, slab, slabs });
        k += 1;
    }
    Ok(PatchDecomposition { delta, q, eps, lo, hi, shells })
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchAudit {
    pub patches: u64,
    pub shells: usize,
    pub cone_volume: f64,
    pub covered_volume: f64,
    /// Monte Carlo estimate of the uncovered volume.
    pub remainder_volume: f64,
    pub remainder_stderr: f64,
    /// `|covered + remainder − cone| / cone`.
    pub closure_error: f64,
    /// `remainder / (δ · cone)`.
    pub remainder_constant: f64,
    pub pairs_checked: u64,
    pub disjoint: bool,
    pub contained: bool,
    pub samples: u64,
    pub seed: u64,
}

/// Checks containment of every shell, pairwise disjointness on sampled pairs
/// and sample points, and estimates the remainder volume by sampling the cone.
pub fn audit_decomposition(d: &PatchDecomposition, samples: u64, seed: u64) -> PatchAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.dim();
    let total = d.cone_volume();

    let mut contained = true;
    for sh in &d.shells {
        contained &= sh.q1 > 0.0 && sh.q_hi <= d.q;
        contained &= (0..d.lo.len()).all(|j| d.lo[j] + sh.counts[j] as f64 * sh.steps[j] <= d.hi[j]);
        contained &= -d.eps + sh.slabs as f64 * sh.slab <= d.eps;
    }

    let count = d.len();
    let mut disjoint = true;
    let mut pairs = 0u64;
    if count > 1 {
        for t in 0..samples.min(20_000) {
            let i = rng.random_range(0..count);
            // half the pairs are grid neighbours, the rest uniform
            let j = if t % 2 == 0 { (i + 1 + rng.random_range(0..3u64)) % count } else { rng.random_range(0..count) };
            if i == j {
                continue;
            }
            let (a, b) = (d.patch_box(i).expect("index"), d.patch_box(j).expect("index"));
            disjoint &= !boxes_overlap(&a, &b);
            contained &= a[1..n].iter().zip(d.lo.iter().zip(&d.hi)).all(|(&(l, h), (&lo, &hi))| lo <= l && h <= hi);
            pairs += 1;
        }
    }

    let mut uncovered = 0u64;
    let mut x = vec![0.0; n - 1];
    for _ in 0..samples {
        // q has density ∝ q^n on (0, Q]
        let q = d.q * rng.random::<f64>().powf(1.0 / (n as f64 + 1.0)).max(f64::MIN_POSITIVE);
        for j in 0..n - 1 {
            x[j] = rng.random_range(d.lo[j]..d.hi[j]);
        }
        let t = rng.random_range(-d.eps..d.eps);
        match d.locate(q, &x, t) {
            None => uncovered += 1,
            Some(idx) => {
                let (k, cells, m) = d.coords(idx).expect("index");
                let mut p = vec![q];
                p.extend_from_slice(&x);
                p.push(t);
                disjoint &= in_box(&d.patch_box(idx).expect("index"), &p);
                // no grid neighbour may also hold the point
                for j in 0..cells.len() {
                    for step in [-1i64, 1] {
                        let c = cells[j] as i64 + step;
                        if c >= 0 && (c as u64) < d.shells[k].counts[j] {
                            let mut nb = cells.clone();
                            nb[j] = c as u64;
                            disjoint &= !in_box(&d.patch_box(d.index_of(k, &nb, m)).expect("index"), &p);
                        }
                    }
                }
                for mm in [m.wrapping_sub(1), m + 1] {
                    if mm < d.shells[k].slabs {
                        disjoint &= !in_box(&d.patch_box(d.index_of(k, &cells, mm)).expect("index"), &p);
                    }
                }
            }
        }
    }
    let f = uncovered as f64 / samples.max(1) as f64;
    let remainder = f * total;
    let stderr = total * (f * (1.0 - f) / samples.max(1) as f64).sqrt();
    let covered = d.covered_volume();
    PatchAudit {
        patches: count,
        shells: d.shells.len(),
        cone_volume: total,
        covered_volume: covered,
        remainder_volume: remainder,
        remainder_stderr: stderr,
        closure_error: ((covered + remainder - total) / total).abs(),
        remainder_constant: remainder / (d.delta * total),
        pairs_checked: pairs,
        disjoint,
        contained,
        samples,
        seed,
    }
}
