mod common;

use common::{jordan_gen, q, r};
use num_rational::BigRational;
use plab_core::exactlin::{Field, Matrix, NilpotentGenerator};
use plab_core::numeric::is_primitive;
use plab_core::parabolas::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn jordan_region() -> ThickenedParabolaRegion<BigRational> {
    ThickenedParabolaRegion::new(jordan_gen(), vec![r(2, 5), r(2, 5)], vec![r(13, 5), r(13, 5)], q(1), q(2)).unwrap()
}

/// Direct slicing for the Jordan block: `D = x3`, `N = x2`, base
/// `(x1 − t·x2 + t²/2·x3, x3)` in `(e1, e3)` coordinates.
fn jordan_oracle(lo: [BigRational; 2], hi: [BigRational; 2], t0: BigRational, t1: BigRational) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for x1 in -60i64..=60 {
        for x2 in -20i64..=20 {
            for x3 in -10i64..=10 {
                if x3 == 0 {
                    continue;
                }
                let t = r(x2, x3);
                if t < t0 || t > t1 {
                    continue;
                }
                let c1 = q(x1) - &t * q(x2) + &t * &t * q(x3) / q(2);
                let c2 = q(x3);
                if c1 >= lo[0] && c1 < hi[0] && c2 >= lo[1] && c2 < hi[1] && is_primitive(&[x1, x2, x3]) {
                    out.push(vec![x1, x2, x3]);
                }
            }
        }
    }
    out
}

#[test]
fn jordan_example_nine_points() {
    let reg = jordan_region();
    let want: Vec<Vec<i64>> = vec![
        vec![1, 1, 1],
        vec![2, 1, 1],
        vec![3, 1, 1],
        vec![3, 2, 1],
        vec![3, 2, 2],
        vec![3, 3, 2],
        vec![4, 2, 1],
        vec![4, 3, 2],
        vec![5, 4, 2],
    ];
    assert_eq!(jordan_oracle([r(2, 5), r(2, 5)], [r(13, 5), r(13, 5)], q(1), q(2)), want);
    assert_eq!(enumerate_bruteforce(&reg, BRUTE_FORCE_LIMIT).unwrap(), want);
    assert_eq!(enumerate_sliced(&reg), want);
}

#[test]
fn jordan_membership_examples() {
    let reg = jordan_region();
    assert!(reg.contains(&[3, 2, 2]));
    // base point of (3,2,2) is (2,0,2), so (4,2,2) with base (3,0,2) lies outside
    assert!(!reg.contains(&[4, 2, 2]));
    // a non-primitive member, dropped only by the gcd filter
    assert!(reg.contains(&[2, 2, 2]));
    assert!(!enumerate_sliced(&reg).contains(&vec![2, 2, 2]));
    assert!(!reg.contains(&[1, 0, 0]));
}

#[test]
fn jordan_volume_is_exact() {
    let v = jordan_region().volume();
    assert_eq!(v.exact, Some(r(726, 100)));
    let rep = count_ratio(&jordan_region());
    assert_eq!(rep.count, 9);
    assert!((rep.predicted - 7.26 / 1.2020569031595942).abs() < 1e-9);
    assert!((rep.ratio - 1.49).abs() < 0.01);
}

#[test]
fn volume_scales_with_window() {
    let reg = jordan_region();
    let v = reg.volume().exact.unwrap();
    assert_eq!(reg.with_window(q(2), q(2)).unwrap().volume().exact.unwrap(), &v * q(2));
    assert_eq!(reg.with_window(q(1), r(3, 2)).unwrap().volume().exact.unwrap(), &v / q(2));
}

#[test]
fn volume_monte_carlo_oracle() {
    // sample the bounding box of the solid and test membership directly
    let reg = jordan_region();
    let (lo, hi) = reg.bounding_box();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) as f64).product();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 200_000;
    let mut hits = 0;
    for _ in 0..samples {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| rng.random_range(a as f64..b as f64)).collect();
        // Jordan slicing in floats, D = x3
        let t = x[1] / x[2];
        let c1 = x[0] - t * x[1] + 0.5 * t * t * x[2];
        if (1.0..=2.0).contains(&t) && (0.4..2.6).contains(&c1) && (0.4..2.6).contains(&x[2]) {
            hits += 1;
        }
    }
    let est = box_vol * hits as f64 / samples as f64;
    assert!((est / 7.26 - 1.0).abs() < 0.02, "estimate {est}");
}

#[test]
fn empty_slice_and_kernel_lines() {
    let reg = ThickenedParabolaRegion::new(jordan_gen(), vec![r(2, 5), r(1, 10)], vec![r(13, 5), r(9, 10)], q(1), q(2)).unwrap();
    assert!(enumerate_sliced(&reg).is_empty());
    assert!(enumerate_bruteforce(&reg, BRUTE_FORCE_LIMIT).unwrap().is_empty());
    // a box straddling D = 0 still enumerates consistently
    let reg = ThickenedParabolaRegion::new(jordan_gen(), vec![r(-3, 2), r(-5, 2)], vec![r(3, 2), r(5, 2)], q(1), q(2)).unwrap();
    assert_eq!(enumerate_sliced(&reg), enumerate_bruteforce(&reg, BRUTE_FORCE_LIMIT).unwrap());
}

#[test]
fn guard_trips() {
    let reg = jordan_region();
    assert!(matches!(enumerate_bruteforce(&reg, 10.0), Err(plab_core::Error::RegionTooLarge { .. })));
}

#[test]
fn box_partition_additivity() {
    let reg = jordan_region();
    let whole = enumerate_sliced(&reg);
    let left = reg.with_box(vec![r(2, 5), r(2, 5)], vec![r(3, 2), r(13, 5)]).unwrap();
    let right = reg.with_box(vec![r(3, 2), r(2, 5)], vec![r(13, 5), r(13, 5)]).unwrap();
    let mut parts = enumerate_sliced(&left);
    parts.extend(enumerate_sliced(&right));
    parts.sort();
    assert_eq!(parts, whole);
    let vsum = left.volume().exact.unwrap() + right.volume().exact.unwrap();
    assert_eq!(vsum, reg.volume().exact.unwrap());
}

#[test]
fn shrink_moves_faces_inward() {
    let reg = jordan_region();
    let s = reg.shrink(0.1).unwrap();
    assert!((s.box_lo()[0].to_f64() - 0.5).abs() < 1e-12);
    assert!((s.box_hi()[1].to_f64() - 2.5).abs() < 1e-12);
    assert!(s.volume().value < reg.volume().value);
}

/// A unimodular change of basis maps the primitive points of the solid
/// bijectively onto the primitive points of its image.
#[test]
fn unimodular_change_of_basis() {
    let reg = jordan_region();
    let m = Matrix::from_rows(vec![vec![q(1), q(1), q(0)], vec![q(0), q(1), q(-1)], vec![q(0), q(0), q(1)]]).unwrap();
    let minv = m.inverse(0.0).unwrap();
    let base = enumerate_sliced(&reg);
    let image: Vec<Vec<i64>> = base
        .iter()
        .map(|x| {
            let xf: Vec<BigRational> = x.iter().map(|&v| q(v)).collect();
            m.mul_vec(&xf).iter().map(|v| v.to_integer().try_into().unwrap()).collect()
        })
        .collect();
    // scan the image's bounding box, pulling points back
    let (lo, hi) = reg.bounding_box();
    let corners: Vec<Vec<BigRational>> = (0..8)
        .map(|mask| (0..3).map(|i| q(if mask >> i & 1 == 1 { hi[i] } else { lo[i] })).collect())
        .collect();
    let imgs: Vec<Vec<BigRational>> = corners.iter().map(|c| m.mul_vec(c)).collect();
    let ilo: Vec<i64> = (0..3).map(|i| imgs.iter().map(|v| v[i].floor().to_integer()).min().unwrap().try_into().unwrap()).collect();
    let ihi: Vec<i64> = (0..3).map(|i| imgs.iter().map(|v| v[i].ceil().to_integer()).max().unwrap().try_into().unwrap()).collect();
    let mut scanned = Vec::new();
    for a in ilo[0]..=ihi[0] {
        for b in ilo[1]..=ihi[1] {
            for c in ilo[2]..=ihi[2] {
                let pre = minv.mul_vec(&[q(a), q(b), q(c)]);
                let pre: Vec<i64> = pre.iter().map(|v| v.to_integer().try_into().unwrap()).collect();
                if reg.contains(&pre) && is_primitive(&[a, b, c]) {
                    scanned.push(vec![a, b, c]);
                }
            }
        }
    }
    let mut image = image;
    image.sort();
    assert_eq!(image, scanned);
    // the conjugated generator is again valid
    let w2 = m.mul(reg.generator().matrix()).mul(&minv);
    assert!(NilpotentGenerator::new(w2).is_ok());
}

#[test]
fn monotone_in_box() {
    let reg = jordan_region();
    let big = reg.with_box(vec![r(1, 5), r(1, 5)], vec![r(3, 1), r(3, 1)]).unwrap();
    let small = enumerate_sliced(&reg);
    let large = enumerate_sliced(&big);
    assert!(small.iter().all(|x| large.contains(x)));
}

#[test]
fn time_average_trivial_cases() {
    let g = jordan_gen();
    assert_eq!(time_average(&g, &LipschitzBump::new(vec![0.0; 3], 0.0), 1.0, 2.0, 1e-6), 0.0);
    // the orbit of every nonzero integer vector leaves a small ball far along e3
    let far = LipschitzBump::new(vec![0.0, 0.0, 0.5], 0.2);
    assert_eq!(time_average(&g, &far, 10.0, 2.0, 1e-6), 0.0);
}
