mod common;

use common::{jordan, jordan_gen, q, qi, r, s2, to_qn};
use num_rational::BigRational;
use plab_core::error::Error;
use plab_core::exactlin::{Field, Matrix, NilpotentGenerator, QuadraticNumber};
use plab_core::fixtures::{random_unimodular, sqrt2_datum};
use plab_core::quadforms::{detect_rational_invariant, effectiveness_diagnostic, invariant_form_space, QuadraticForm};
use plab_core::quadric_patches::quadric_generator;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `exp(t·w) = I + t·w + t²/2·w²` for `w³ = 0`.
fn exp_tw<F: Field>(w: &Matrix<F>, t: &F) -> Matrix<F> {
    let w2 = w.mul(w);
    Matrix::<F>::identity(w.rows()).add(&w.scale(t)).add(&w2.scale(&t.square().half()))
}

fn conj_sqrt2() -> NilpotentGenerator<QuadraticNumber> {
    // P·e1 = (1, √2, 0), so Img(w′²) = span((1, √2, 0))
    let p = Matrix::from_rows(vec![
        vec![qi(1), qi(0), qi(0)],
        vec![s2(q(0), q(1)), qi(1), qi(0)],
        vec![qi(0), qi(0), qi(1)],
    ])
    .unwrap();
    let pinv = p.inverse(0.0).unwrap();
    NilpotentGenerator::new(p.mul(&to_qn(&jordan())).mul(&pinv)).unwrap()
}

#[test]
fn jordan_space_is_two_dimensional() {
    let space = invariant_form_space(&jordan_gen());
    let a = QuadraticForm::from_monomials(3, &[(0, 2, q(2)), (1, 1, q(-1))]);
    let b = QuadraticForm::from_monomials(3, &[(2, 2, q(1))]);
    assert_eq!(space.basis, vec![a, b]);
    assert_eq!(space.basis[0].to_string(), "2*x1*x3 - x2^2");
    assert_eq!(space.basis[1].to_string(), "x3^2");
}

#[test]
fn jordan_basis_survives_the_flow_symbolically() {
    // exp(tJ)v = (v1 + t·v2 + t²/2·v3, v2 + t·v3, v3)
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    let space = invariant_form_space(&jordan_gen());
    for _ in 0..100 {
        let t = r(rng.random_range(-40..40), rng.random_range(1..9));
        let v: Vec<BigRational> = (0..3).map(|_| r(rng.random_range(-20..20), rng.random_range(1..5))).collect();
        let half = r(1, 2);
        let moved = vec![
            &v[0] + &t * &v[1] + &half * &t * &t * &v[2],
            &v[1] + &t * &v[2],
            v[2].clone(),
        ];
        for p in &space.basis {
            assert_eq!(p.eval(&moved), p.eval(&v));
        }
    }
}

#[test]
fn quadric_generator_space_contains_its_form() {
    let d = sqrt2_datum();
    let g = quadric_generator(&d).unwrap();
    let space = invariant_form_space(&g);
    assert!(d.form().invariance_defect(g.matrix()).entries().iter().all(Field::is_zero));
    // R in the span: adding it does not raise the rank
    let mut rows: Vec<Vec<QuadraticNumber>> = space.basis.iter().map(QuadraticForm::vectorized).collect();
    let k = rows.len();
    rows.push(d.form().vectorized());
    assert_eq!(Matrix::from_rows(rows).unwrap().rank(0.0), k);
    assert!(space.basis.iter().all(|p| !p.is_zero()));
}

#[test]
fn detect_over_rationals_returns_basis_member() {
    let space = invariant_form_space(&jordan_gen());
    let det = detect_rational_invariant(&space, 50);
    let form = det.form.unwrap();
    assert!(!form.is_zero() && form.is_rational() && !det.inconclusive);
    assert!(form.invariance_defect(&jordan()).entries().iter().all(Field::is_zero));
}

#[test]
fn conjugated_jordan_over_sqrt2_keeps_a_rational_form() {
    // ground truth: P fixes the x3 coordinate, so x3² ∘ P⁻¹ = x3² stays invariant
    let g = conj_sqrt2();
    let x3sq = QuadraticForm::from_monomials(3, &[(2, 2, qi(1))]);
    assert!(x3sq.invariance_defect(g.matrix()).entries().iter().all(Field::is_zero));
    let det = detect_rational_invariant(&invariant_form_space(&g), 50);
    let form = det.form.unwrap();
    assert!(form.is_rational() && !form.is_zero());
    assert!(form.invariance_defect(g.matrix()).entries().iter().all(Field::is_zero));
}

#[test]
fn sqrt2_quadric_has_no_rational_invariant() {
    let g = quadric_generator(&sqrt2_datum()).unwrap();
    let space = invariant_form_space(&g);
    let det = detect_rational_invariant(&space, 50);
    assert!(det.form.is_none() && !det.inconclusive);
    // brute force over integer combinations of sup-norm ≤ 5
    assert_eq!(space.basis.len(), 2);
    for a in -5i64..=5 {
        for b in -5i64..=5 {
            if a == 0 && b == 0 {
                continue;
            }
            let p = QuadraticForm::new(space.basis[0].matrix().scale(&qi(a)).add(&space.basis[1].matrix().scale(&qi(b)))).unwrap();
            assert!(!p.is_rational(), "({a}, {b}) gives a rational form");
        }
    }
}

#[test]
fn doubling_the_generator_keeps_the_space() {
    let g = quadric_generator(&sqrt2_datum()).unwrap();
    let g2 = g.scaled(&qi(2)).unwrap();
    assert_eq!(invariant_form_space(&g).basis, invariant_form_space(&g2).basis);
    let j2 = jordan_gen().scaled(&q(2)).unwrap();
    let det = detect_rational_invariant(&invariant_form_space(&j2), 50).form.unwrap();
    assert!(det.invariance_defect(&jordan()).entries().iter().all(Field::is_zero));
}

#[test]
fn float_detection_finds_jordan_form_and_flags_absence() {
    let jf = NilpotentGenerator::new(jordan().map(|x| x.to_f64())).unwrap();
    let det = detect_rational_invariant(&invariant_form_space(&jf), 5);
    let form = det.form.unwrap();
    assert!(!det.inconclusive);
    assert!(form.invariance_defect(jf.matrix()).frobenius_norm() < 1e-12);

    let g = quadric_generator(&sqrt2_datum()).unwrap();
    let gf = NilpotentGenerator::new(g.matrix().map(|x| x.to_f64())).unwrap();
    let det = detect_rational_invariant(&invariant_form_space(&gf), 5);
    assert!(det.form.is_none() && det.inconclusive);
}

#[test]
fn diagnostic_jordan_witness_is_x2_squared() {
    // v = e1, so every form without x1² vanishes; the smallest is x2²
    let res = effectiveness_diagnostic(&jordan_gen(), 10.0, 11).unwrap();
    assert!(!res.member && res.gate.is_none());
    assert_eq!(res.witness.unwrap(), QuadraticForm::from_monomials(3, &[(1, 1, q(1))]));
}

#[test]
fn diagnostic_norm_gate() {
    // ‖J‖_F = √2 ≥ 1
    let res = effectiveness_diagnostic(&jordan_gen(), 1.0, 11).unwrap();
    assert!(!res.member && res.witness.is_none());
    assert!(res.gate.unwrap().contains("|w|"));
    let g4 = NilpotentGenerator::new(plab_core::fixtures::jordan_padded(4)).unwrap();
    assert!(matches!(effectiveness_diagnostic(&g4, 10.0, 11), Err(Error::DimensionNot3(4))));
}

#[test]
fn diagnostic_float_direction_with_square_roots() {
    // Img(w²) along u = (1, √2, √3): x1² + x2² − x3² vanishes at u
    let s = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    let p = Matrix::from_rows(vec![vec![s[0], 0.0, 0.0], vec![s[1], 1.0, 0.0], vec![s[2], 0.0, 1.0]]).unwrap();
    let pinv = p.inverse(0.0).unwrap();
    let j = jordan().map(|x| x.to_f64());
    let g = NilpotentGenerator::new(p.mul(&j).mul(&pinv)).unwrap();
    let res = effectiveness_diagnostic(&g, 10.0, 11).unwrap();
    assert!(!res.member);
    let w = res.witness.unwrap();
    assert_eq!(w, QuadraticForm::from_monomials(3, &[(0, 0, q(1)), (1, 1, q(1)), (2, 2, q(-1))]));
    // oracle: no height-1 form with support ≤ 2 comes within the threshold
    let norm = 6f64.sqrt();
    let mono = [1.0, 2.0, 3.0, 2.0 * s[1], 2.0 * s[2], 2.0 * s[1] * s[2]].map(|x| x / (norm * norm));
    let thr = 11f64.powf(-10.0);
    for i in 0..6 {
        for j in i..6 {
            for a in [-1.0, 1.0] {
                for b in [-1.0, 0.0, 1.0] {
                    let v = a * mono[i] + if i == j { 0.0 } else { b * mono[j] };
                    if i != j && b == 0.0 {
                        continue;
                    }
                    assert!(v.abs() >= thr);
                }
            }
        }
    }
}

#[test]
fn diagnostic_stays_false_as_t0_grows() {
    for t0 in [11, 15, 20] {
        assert!(!effectiveness_diagnostic(&jordan_gen(), 10.0, t0).unwrap().member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariant_forms_are_exactly_preserved(seed in 0u64..10_000, tn in -30i64..30, td in 1i64..7, v in proptest::collection::vec(-12i64..12, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_unimodular(&mut rng, 4, 8);
        let w = p.mul(&plab_core::fixtures::jordan_padded(4)).mul(&p.inverse(0.0).unwrap());
        let g = NilpotentGenerator::new(w.clone()).unwrap();
        let t = r(tn, td);
        let vq: Vec<BigRational> = v.iter().map(|&k| q(k)).collect();
        let moved = exp_tw(&w, &t).mul_vec(&vq);
        prop_assert_eq!(&moved, &g.unipotent_apply(&t, &vq).unwrap());
        let space = invariant_form_space(&g);
        // 2·x1x3 − x2² and the three forms in x3, x4, pulled back
        prop_assert_eq!(space.basis.len(), 4);
        for f in &space.basis {
            prop_assert_eq!(f.eval(&moved), f.eval(&vq));
            prop_assert!(f.invariance_defect(&w).entries().iter().all(Field::is_zero));
        }
    }
}
