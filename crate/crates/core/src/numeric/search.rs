//! Branch-and-bound over integer intervals and boxes.

use super::ball::BallPoly;

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// `gcd(x) = 1` (so also `x ≠ 0`).
pub fn is_primitive(x: &[i64]) -> bool {
    let mut g = 0;
    for &v in x {
        g = gcd_i64(g, v);
        if g == 1 {
            return true;
        }
    }
    g == 1
}

const LEAF: i64 = 6;

/// Integers `s ∈ [lo, hi]` where every polynomial is positive, with
/// undecided points settled by `exact`.
///
/// Each polynomial encodes one constraint `p(s) ≥ 0` or `p(s) > 0`; the
/// distinction only matters where a ball straddles 0, and those points are
/// handed to `exact`, which must implement the true membership test. Ranges
/// certified positive are accepted wholesale, ranges certified negative for
/// some constraint are dropped. Results are appended in increasing order.
pub fn solve_line(polys: &[BallPoly], lo: i64, hi: i64, exact: &mut dyn FnMut(i64) -> bool, out: &mut Vec<i64>) {
    if lo > hi {
        return;
    }
    let active: Vec<usize> = (0..polys.len()).collect();
    recurse(polys, &active, lo, hi, exact, out);
}

fn recurse(polys: &[BallPoly], active: &[usize], lo: i64, hi: i64, exact: &mut dyn FnMut(i64) -> bool, out: &mut Vec<i64>) {
    let mut undecided = Vec::with_capacity(active.len());
    for &i in active {
        let r = polys[i].range(lo as f64, hi as f64);
        if r.is_negative() {
            return;
        }
        if !r.is_positive() {
            undecided.push(i);
        }
    }
    if undecided.is_empty() {
        out.extend(lo..=hi);
        return;
    }
    if hi - lo < LEAF {
        'points: for s in lo..=hi {
            let mut unsure = false;
            for &i in &undecided {
                let v = polys[i].eval(s as f64);
                if v.is_negative() {
                    continue 'points;
                }
                if !v.is_positive() {
                    unsure = true;
                }
            }
            if !unsure || exact(s) {
                out.push(s);
            }
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    recurse(polys, &undecided, lo, mid, exact, out);
    recurse(polys, &undecided, mid + 1, hi, exact, out);
}

/// Recursively bisects the integer box `[lo, hi]` (inclusive), discarding
/// sub-boxes for which `possible` returns `false`, and calls `leaf` on every
/// surviving point in lexicographic order.
pub fn subdivide_boxes(lo: &[i64], hi: &[i64], possible: &mut dyn FnMut(&[i64], &[i64]) -> bool, leaf: &mut dyn FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    rec_boxes(&mut lo, &mut hi, possible, leaf);
}

fn rec_boxes(lo: &mut [i64], hi: &mut [i64], possible: &mut dyn FnMut(&[i64], &[i64]) -> bool, leaf: &mut dyn FnMut(&[i64])) {
    if !possible(lo, hi) {
        return;
    }
    // splitting the leading open axis first keeps the lower half ahead of
    // the upper one, so leaves come out in lexicographic order
    if lo.iter().zip(hi.iter()).all(|(a, b)| a == b) {
        leaf(lo);
        return;
    }
    let k = first_open(lo, hi);
    split(lo, hi, k, possible, leaf);
}

fn first_open(lo: &[i64], hi: &[i64]) -> usize {
    lo.iter().zip(hi).position(|(a, b)| a < b).unwrap_or(0)
}

fn split(lo: &mut [i64], hi: &mut [i64], k: usize, possible: &mut dyn FnMut(&[i64], &[i64]) -> bool, leaf: &mut dyn FnMut(&[i64])) {
    let (a, b) = (lo[k], hi[k]);
    let m = a + (b - a).div_euclid(2);
    hi[k] = m;
    rec_boxes(lo, hi, possible, leaf);
    hi[k] = b;
    lo[k] = m + 1;
    rec_boxes(lo, hi, possible, leaf);
    lo[k] = a;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Ball;

    #[test]
    fn gcd_and_primitive() {
        assert_eq!(gcd_i64(12, -18), 6);
        assert!(is_primitive(&[4, 6, 9]));
        assert!(!is_primitive(&[4, 2, 2]));
        assert!(!is_primitive(&[0, 0, 0]));
    }

    #[test]
    fn quadratic_window() {
        // s² − 10 ≥ 0 and 50 − s² > 0  →  |s| ∈ [4, 7]
        let p = BallPoly { coef: vec![Ball::exact(-10.0), Ball::ZERO, Ball::exact(1.0)] };
        let q = BallPoly { coef: vec![Ball::exact(50.0), Ball::ZERO, Ball::exact(-1.0)] };
        let mut out = Vec::new();
        solve_line(&[p, q], -1000, 1000, &mut |s| s * s >= 10 && s * s < 50, &mut out);
        assert_eq!(out, vec![-7, -6, -5, -4, 4, 5, 6, 7]);
    }

    #[test]
    fn boundary_points_use_exact_test() {
        // s − 3 ≥ 0 is tight at 3; the exact test decides
        let p = BallPoly::linear(Ball::exact(-3.0), Ball::exact(1.0));
        let mut calls = Vec::new();
        let mut out = Vec::new();
        solve_line(&[p], 0, 10, &mut |s| {
            calls.push(s);
            s >= 3
        }, &mut out);
        assert_eq!(out, (3..=10).collect::<Vec<_>>());
        assert_eq!(calls, vec![3]);
    }

    #[test]
    fn boxes_visit_lexicographically() {
        let mut seen = Vec::new();
        subdivide_boxes(&[0, 0], &[3, 2], &mut |_, _| true, &mut |p| seen.push(p.to_vec()));
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen.len(), 12);
    }
}
