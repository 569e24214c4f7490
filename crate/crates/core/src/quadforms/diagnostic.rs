//! Membership test for generators whose `Img(w²)` direction stays
//! quantitatively away from the zero sets of small integral forms.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use super::QuadraticForm;
use crate::error::{Error, Result};
use crate::exactlin::{dot, Field, NilpotentGenerator};

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticResult {
    pub member: bool,
    /// Smallest violating form, ordered by height, support size, support
    /// (monomials `x1², x2², x3², x1x2, x1x3, x2x3`), then coefficients.
    pub witness: Option<QuadraticForm<BigRational>>,
    pub norm: &'static str,
    pub norm_w: f64,
    pub norm_w2: f64,
    /// Which norm gate failed, if any.
    pub gate: Option<String>,
    pub threshold: f64,
    pub c: f64,
    pub t0: u64,
}

/// Candidate key: support size, support mask order, coefficients.
type Key = (usize, Vec<usize>, [i64; 6]);

fn key_of(a: &[i64; 6]) -> Key {
    let support: Vec<usize> = (0..6).filter(|&k| a[k] != 0).collect();
    (support.len(), support, *a)
}

/// Reorders `upper_pairs(3)` coefficients (`11,12,13,22,23,33`) into the
/// witness monomial order (`11,22,33,12,13,23`).
const ORDER: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

pub fn effectiveness_diagnostic<F: Field>(g: &NilpotentGenerator<F>, c: f64, t0: u64) -> Result<DiagnosticResult> {
    if g.dim() != 3 {
        return Err(Error::DimensionNot3(g.dim()));
    }
    if t0 == 0 || c <= 0.0 {
        return Err(Error::InvalidInput("diagnostic needs C > 0 and T0 ≥ 1".into()));
    }
    let norm_w = g.matrix().frobenius_norm();
    let norm_w2 = g.square().frobenius_norm();
    let threshold = (t0 as f64).powf(-c);
    let mut out = DiagnosticResult {
        member: false,
        witness: None,
        norm: "frobenius",
        norm_w,
        norm_w2,
        gate: None,
        threshold,
        c,
        t0,
    };
    if norm_w >= c {
        out.gate = Some(format!("|w| = {norm_w} is not below C"));
        return Ok(out);
    }
    if norm_w2 <= 1.0 / c {
        out.gate = Some(format!("|w^2| = {norm_w2} is not above 1/C"));
        return Ok(out);
    }
    // w³ = 0 is part of generator validation

    let v2 = g.v2();
    let vf: Vec<f64> = v2.iter().map(Field::to_f64).collect();
    let len = vf.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = vf.iter().map(|x| x / len).collect();
    let m: [f64; 6] = ORDER.map(|(i, j)| u[i] * u[j]);

    let norm2 = dot(v2, v2);
    let thr_exact = F::from_rational(&BigRational::from_float(threshold).expect("finite threshold"));
    let exact_violates = |a: &[i64; 6]| -> bool {
        let terms: Vec<(usize, usize, F)> = ORDER.iter().zip(a).map(|(&(i, j), &k)| (i, j, F::from_i64(k))).collect();
        let p = QuadraticForm::from_monomials(3, &terms).eval(v2);
        // |P(v2)| / |v2|² < thr
        let lhs = p.square();
        let rhs = thr_exact.square() * norm2.square();
        lhs.cmp_to(&rhs) == std::cmp::Ordering::Less
    };
    let slop = 64.0 * f64::EPSILON * (1.0 + t0 as f64) * 6.0;

    for h in 1..=t0 as i64 {
        let best = (-h..=h)
            .into_par_iter()
            .filter_map(|a0| scan_height(h, a0, &m, threshold, slop, &exact_violates))
            .min_by(|x, y| key_of(x).cmp(&key_of(y)));
        if let Some(a) = best {
            let terms: Vec<(usize, usize, BigRational)> =
                ORDER.iter().zip(&a).map(|(&(i, j), &k)| (i, j, BigRational::from_integer(k.into()))).collect();
            out.witness = Some(QuadraticForm::from_monomials(3, &terms));
            return Ok(out);
        }
    }
    out.member = true;
    Ok(out)
}

/// Smallest violating form of height exactly `h` whose first coefficient is `a0`.
fn scan_height(h: i64, a0: i64, m: &[f64; 6], thr: f64, slop: f64, exact: &(dyn Fn(&[i64; 6]) -> bool + Sync)) -> Option<[i64; 6]> {
    if a0 < 0 {
        return None;
    }
    let mut best: Option<[i64; 6]> = None;
    let mut a = [a0, 0, 0, 0, 0, 0];
    let p0 = a0 as f64 * m[0];
    for a1 in -h..=h {
        if a0 == 0 && a1 < 0 {
            continue;
        }
        let p1 = p0 + a1 as f64 * m[1];
        for a2 in -h..=h {
            if a0 == 0 && a1 == 0 && a2 < 0 {
                continue;
            }
            let p2 = p1 + a2 as f64 * m[2];
            for a3 in -h..=h {
                if a0 == 0 && a1 == 0 && a2 == 0 && a3 < 0 {
                    continue;
                }
                let p3 = p2 + a3 as f64 * m[3];
                for a4 in -h..=h {
                    if a0 == 0 && a1 == 0 && a2 == 0 && a3 == 0 && a4 < 0 {
                        continue;
                    }
                    let p4 = p3 + a4 as f64 * m[4];
                    let top = a0.abs().max(a1.abs()).max(a2.abs()).max(a3.abs()).max(a4.abs());
                    for a5 in -h..=h {
                        if top < h && a5.abs() < h {
                            continue;
                        }
                        if a0 == 0 && a1 == 0 && a2 == 0 && a3 == 0 && a4 == 0 && a5 <= 0 {
                            continue;
                        }
                        let p = (p4 + a5 as f64 * m[5]).abs();
                        if p > thr + slop {
                            continue;
                        }
                        a[1] = a1;
                        a[2] = a2;
                        a[3] = a3;
                        a[4] = a4;
                        a[5] = a5;
                        if (p < thr - slop || exact(&a)) && best.is_none_or(|b| key_of(&a) < key_of(&b)) {
                            best = Some(a);
                        }
                    }
                }
            }
        }
    }
    best
}
