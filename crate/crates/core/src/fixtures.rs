//! Named generators and random test regions used by the CLI and the test
//! suites.

use num_rational::BigRational;
use rand::Rng;

use crate::exactlin::{Matrix, NilpotentGenerator, QuadraticNumber};
use crate::parabolas::ThickenedParabolaRegion;
use crate::quadforms::QuadraticForm;
use crate::quadric_patches::QuadricDatum;

fn q(p: i64) -> BigRational {
    BigRational::from_integer(p.into())
}

/// The 3×3 Jordan block: `J·e3 = e2`, `J·e2 = e1`.
pub fn jordan3() -> Matrix<BigRational> {
    Matrix::from_fn(3, 3, |i, j| if j == i + 1 { q(1) } else { q(0) })
}

/// Jordan block of size 3 padded with zeros to dimension `n`.
pub fn jordan_padded(n: usize) -> Matrix<BigRational> {
    Matrix::from_fn(n, n, |i, j| if j == i + 1 && j < 3 { q(1) } else { q(0) })
}

/// Quadric datum over `ℚ(√2)` whose generator has no rational invariant form:
/// `S = [[0, √2/2, −1/2], [√2/2, 1, 0], [−1/2, 0, 0]]`, `z = e1`,
/// `e = (0, 1, √2)`, `e3 = (0, 0, 1)`.
pub fn sqrt2_datum() -> QuadricDatum<QuadraticNumber> {
    let r = |a: i64, b: i64, den: i64| QuadraticNumber::new(BigRational::new(a.into(), den.into()), BigRational::new(b.into(), den.into()), 2);
    let z = QuadraticNumber::rational(q(0));
    let s = Matrix::from_rows(vec![
        vec![z.clone(), r(0, 1, 2), r(-1, 0, 2)],
        vec![r(0, 1, 2), r(1, 0, 1), z.clone()],
        vec![r(-1, 0, 2), z.clone(), z.clone()],
    ])
    .expect("square");
    let form = QuadraticForm::new(s).expect("symmetric");
    let one = r(1, 0, 1);
    let zv = vec![one.clone(), z.clone(), z.clone()];
    let ev = vec![z.clone(), one.clone(), r(0, 1, 1)];
    let e3 = vec![z.clone(), z, one];
    QuadricDatum::new(form, zv, ev, vec![e3]).expect("valid datum")
}

/// Random unimodular matrix: a product of elementary row operations.
pub fn random_unimodular(rng: &mut impl Rng, n: usize, steps: usize) -> Matrix<BigRational> {
    let mut m = Matrix::<BigRational>::identity(n);
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        while j == i {
            j = rng.random_range(0..n);
        }
        let k = q(if rng.random_bool(0.5) { 1 } else { -1 });
        let rows = m.to_rows();
        let new_row: Vec<BigRational> = rows[i].iter().zip(&rows[j]).map(|(a, b)| a + &k * b).collect();
        for (c, v) in new_row.into_iter().enumerate() {
            m.set(i, c, v);
        }
    }
    m
}

fn small_rational(rng: &mut impl Rng, lo: i64, hi: i64) -> BigRational {
    let den = rng.random_range(1..=5);
    BigRational::new(rng.random_range(lo * den..=hi * den).into(), den.into())
}

/// A random conjugate of the padded Jordan block with a small random box
/// and time window `T ≤ 10`, retried until its bounding box has at most
/// `max_points` integer points.
pub fn random_region(rng: &mut impl Rng, n: usize, max_points: f64) -> ThickenedParabolaRegion<BigRational> {
    loop {
        let p = random_unimodular(rng, n, 2 * n);
        let pinv = p.inverse(0.0).expect("unimodular");
        let w = p.mul(&jordan_padded(n)).mul(&pinv);
        let g = NilpotentGenerator::new(w).expect("conjugate of a Jordan block");
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..n - 1 {
            let a = small_rational(rng, -3, 3);
            let width = small_rational(rng, 0, 2) + BigRational::new(1.into(), 3.into());
            hi.push(&a + width);
            lo.push(a);
        }
        let t = small_rational(rng, 0, 9) + q(1);
        let beta = small_rational(rng, 0, 1) + BigRational::new(11.into(), 10.into());
        let Ok(region) = ThickenedParabolaRegion::new(g, lo, hi, t, beta) else { continue };
        let (blo, bhi) = region.bounding_box();
        let pts: f64 = blo.iter().zip(&bhi).map(|(a, b)| (b - a + 1) as f64).product();
        if pts <= max_points {
            return region;
        }
    }
}
