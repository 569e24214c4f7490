use std::sync::Mutex;

static CACHE: Mutex<Vec<(u32, f64)>> = Mutex::new(Vec::new());

/// Riemann zeta at an integer `s ≥ 2`, to relative error below `1e-12`.
///
/// Partial sums up to `N` are bracketed by the integral tail bounds
/// `∫_{N+1}^∞ x^{-s} dx ≤ Σ_{k>N} k^{-s} ≤ ∫_N^∞ x^{-s} dx`; `N` is chosen so
/// the bracket is narrow enough and the midpoint is returned.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2, "zeta needs s >= 2");
    if let Some(&(_, v)) = CACHE.lock().expect("zeta cache").iter().find(|(k, _)| *k == s) {
        return v;
    }
    let sf = s as f64;
    // bracket width ≈ N^{-s}; relative to ζ(s) ≥ 1
    let n = (1e12_f64.powf(1.0 / sf) * 2.0).ceil().max(16.0) as u64;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in (1..=n).rev() {
        let term = (k as f64).powf(-sf) - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    }
    let upper = (n as f64).powf(1.0 - sf) / (sf - 1.0);
    let lower = ((n + 1) as f64).powf(1.0 - sf) / (sf - 1.0);
    let v = sum + 0.5 * (upper + lower);
    CACHE.lock().expect("zeta cache").push((s, v));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((zeta(2) - z2).abs() / z2 < 1e-12);
        assert!((zeta(3) - 1.202_056_903_159_594_2).abs() < 1e-12);
        let z4 = std::f64::consts::PI.powi(4) / 90.0;
        assert!((zeta(4) - z4).abs() / z4 < 1e-12);
    }
}
