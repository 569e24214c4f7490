#![allow(dead_code)]

use num_rational::BigRational;
use plab_core::exactlin::{Matrix, NilpotentGenerator, QuadraticNumber};

pub fn q(p: i64) -> BigRational {
    BigRational::from_integer(p.into())
}

pub fn r(p: i64, d: i64) -> BigRational {
    BigRational::new(p.into(), d.into())
}

/// `J·e3 = e2`, `J·e2 = e1`.
pub fn jordan() -> Matrix<BigRational> {
    Matrix::from_rows(vec![vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)], vec![q(0), q(0), q(0)]]).unwrap()
}

pub fn jordan_gen() -> NilpotentGenerator<BigRational> {
    NilpotentGenerator::new(jordan()).unwrap()
}

/// `a + b·√2`.
pub fn s2(a: BigRational, b: BigRational) -> QuadraticNumber {
    QuadraticNumber::new(a, b, 2)
}

pub fn qi(k: i64) -> QuadraticNumber {
    QuadraticNumber::rational(q(k))
}

pub fn to_qn(m: &Matrix<BigRational>) -> Matrix<QuadraticNumber> {
    m.map(|x| QuadraticNumber::rational(x.clone()))
}
