//! Truncated multivariate Taylor series ("jets") with forward arithmetic.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::expr::Num;

/// Monomial layout shared by all jets of one (variables, order) pair.
#[derive(Debug)]
pub struct JetShape {
    vars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)` with `exps[i] + exps[j] = exps[k]`.
    triples: Vec<(u32, u32, u32)>,
}

impl JetShape {
    pub fn new(vars: usize, order: usize) -> Arc<Self> {
        let mut exps = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; vars];
            push_degree(&mut exps, &mut cur, 0, deg);
        }
        let index: HashMap<Vec<u8>, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut triples = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = index.get(&s) {
                    triples.push((i as u32, j as u32, k as u32));
                }
            }
        }
        Arc::new(Self { vars, order, exps, index, triples })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn len(&self) -> usize {
        self.exps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }
    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exps
    }
    pub fn index_of(&self, exp: &[u8]) -> Option<usize> {
        self.index.get(exp).copied()
    }
}

// exponent vectors of total degree `left` in lexicographically decreasing order
fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        push_degree(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn factorial(k: usize) -> BigInt {
    (1..=k as u64).map(BigInt::from).product()
}

/// Taylor coefficients `c_α` of a function around a base point, truncated
/// above the shape's order.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    shape: Arc<JetShape>,
    coef: Vec<T>,
}

impl<T: Num> Jet<T> {
    pub fn constant(shape: &Arc<JetShape>, value: T) -> Option<Self> {
        let zero = value.lift(&rat(0, 1))?;
        let mut coef = vec![zero; shape.len()];
        coef[0] = value;
        Some(Self { shape: shape.clone(), coef })
    }

    /// The affine jet `value + Σ dir_i·u_i`.
    pub fn affine(shape: &Arc<JetShape>, value: T, dir: &[T]) -> Option<Self> {
        let mut j = Self::constant(shape, value)?;
        for (i, d) in dir.iter().enumerate().take(shape.vars) {
            let mut e = vec![0u8; shape.vars];
            e[i] = 1;
            if shape.order >= 1 {
                j.coef[shape.index[&e]] = d.clone();
            }
        }
        Some(j)
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coef
    }

    pub fn value(&self) -> &T {
        &self.coef[0]
    }

    /// Taylor coefficient of `u^exp`; `None` above the truncation order.
    pub fn coeff(&self, exp: &[u8]) -> Option<&T> {
        self.shape.index_of(exp).map(|k| &self.coef[k])
    }

    /// Partial derivative `∂^exp` at the base point, i.e. `exp! · c_exp`.
    pub fn derivative(&self, exp: &[u8]) -> Option<T> {
        let c = self.coeff(exp)?;
        let f: BigInt = exp.iter().map(|&k| factorial(k as usize)).product();
        c.mul(&c.lift(&BigRational::from_integer(f))?)
    }

    fn zip(&self, o: &Self, f: impl Fn(&T, &T) -> Option<T>) -> Option<Self> {
        debug_assert!(Arc::ptr_eq(&self.shape, &o.shape) || self.shape.len() == o.shape.len());
        let coef = self.coef.iter().zip(&o.coef).map(|(a, b)| f(a, b)).collect::<Option<Vec<T>>>()?;
        Some(Self { shape: self.shape.clone(), coef })
    }

    /// `Σ series[k]·(self − self(0))^k`, the composition with a univariate
    /// Taylor series around the base value.
    fn compose(&self, series: &[T]) -> Option<Self> {
        let mut h = self.clone();
        h.coef[0] = self.coef[0].lift(&rat(0, 1))?;
        let mut acc = Self::constant(&self.shape, series[self.shape.order].clone())?;
        for k in (0..self.shape.order).rev() {
            acc = acc.mul(&h)?;
            acc.coef[0] = acc.coef[0].add(&series[k])?;
        }
        Some(acc)
    }

    fn recip(&self) -> Option<Self> {
        let a = &self.coef[0];
        let inv = a.lift(&rat(1, 1))?.div(a)?;
        let mut series = Vec::with_capacity(self.shape.order + 1);
        let mut p = inv.clone();
        for k in 0..=self.shape.order {
            series.push(if k % 2 == 0 { p.clone() } else { p.neg() });
            p = p.mul(&inv)?;
        }
        self.compose(&series)
    }
}

impl<T: Num> Num for Jet<T> {
    fn lift(&self, c: &BigRational) -> Option<Self> {
        Self::constant(&self.shape, self.coef[0].lift(c)?)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.zip(o, T::add)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.zip(o, T::sub)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        let zero = self.coef[0].lift(&rat(0, 1))?;
        let mut coef = vec![zero; self.coef.len()];
        for &(i, j, k) in &self.shape.triples {
            let p = self.coef[i as usize].mul(&o.coef[j as usize])?;
            coef[k as usize] = coef[k as usize].add(&p)?;
        }
        Some(Self { shape: self.shape.clone(), coef })
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.mul(&o.recip()?)
    }
    fn neg(&self) -> Self {
        Self { shape: self.shape.clone(), coef: self.coef.iter().map(T::neg).collect() }
    }
    fn sqrt(&self) -> Option<Self> {
        // √(a + h) = √a · Σ binom(1/2, k) (h/a)^k, needs a ≠ 0
        let a = &self.coef[0];
        let s = a.sqrt()?;
        let inv = a.lift(&rat(1, 1))?.div(a)?;
        let mut series = Vec::with_capacity(self.shape.order + 1);
        let mut binom = rat(1, 1);
        let mut p = s;
        for k in 0..=self.shape.order {
            series.push(p.mul(&p.lift(&binom)?)?);
            binom *= rat(1 - 2 * k as i64, 2 * (k as i64 + 1));
            p = p.mul(&inv)?;
        }
        self.compose(&series)
    }
    fn exp(&self) -> Option<Self> {
        let e = self.coef[0].exp()?;
        let series = (0..=self.shape.order)
            .map(|k| e.mul(&e.lift(&BigRational::new(1.into(), factorial(k)))?))
            .collect::<Option<Vec<T>>>()?;
        self.compose(&series)
    }
    fn sin(&self) -> Option<Self> {
        let (s, c) = (self.coef[0].sin()?, self.coef[0].cos()?);
        let cycle = [s.clone(), c.clone(), s.neg(), c.neg()];
        let series = (0..=self.shape.order)
            .map(|k| cycle[k % 4].mul(&s.lift(&BigRational::new(1.into(), factorial(k)))?))
            .collect::<Option<Vec<T>>>()?;
        self.compose(&series)
    }
    fn cos(&self) -> Option<Self> {
        let (s, c) = (self.coef[0].sin()?, self.coef[0].cos()?);
        let cycle = [c.clone(), s.neg(), c.neg(), s.clone()];
        let series = (0..=self.shape.order)
            .map(|k| cycle[k % 4].mul(&s.lift(&BigRational::new(1.into(), factorial(k)))?))
            .collect::<Option<Vec<T>>>()?;
        self.compose(&series)
    }
}
