//! Expression trees for `F(x1, …, x9)` and a recursive-descent parser.

use std::fmt;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::exactlin::{parse_rational, Field};
use crate::numeric::Ball;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(BigRational),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

/// Arithmetic an expression can be evaluated in. Partial operations return
/// `None` when the result leaves the number system (e.g. an irrational
/// square root over `ℚ`).
pub trait Num: Clone {
    /// A constant living in the same context as `self`.
    fn lift(&self, c: &BigRational) -> Option<Self>;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;
    fn sqrt(&self) -> Option<Self>;
    fn exp(&self) -> Option<Self>;
    fn sin(&self) -> Option<Self>;
    fn cos(&self) -> Option<Self>;

    fn powi(&self, k: i32) -> Option<Self> {
        if k < 0 {
            let one = self.lift(&BigRational::from_integer(1.into()))?;
            return one.div(&self.powi(-k)?);
        }
        let mut acc = self.lift(&BigRational::from_integer(1.into()))?;
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Some(acc)
    }
}

impl<F: Field> Num for F {
    fn lift(&self, c: &BigRational) -> Option<Self> {
        Some(F::from_rational(c))
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.compatible(o).then(|| self.clone() + o.clone())
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.compatible(o).then(|| self.clone() - o.clone())
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.compatible(o).then(|| self.clone() * o.clone())
    }
    fn div(&self, o: &Self) -> Option<Self> {
        (self.compatible(o) && !o.is_zero()).then(|| self.clone() / o.clone())
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn sqrt(&self) -> Option<Self> {
        self.try_sqrt()
    }
    fn exp(&self) -> Option<Self> {
        self.try_exp()
    }
    fn sin(&self) -> Option<Self> {
        self.try_sin()
    }
    fn cos(&self) -> Option<Self> {
        self.try_cos()
    }
}

impl Num for Ball {
    fn lift(&self, c: &BigRational) -> Option<Self> {
        Some(Ball::of(c))
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(*self + *o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(*self - *o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(*self * *o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        Ball::div(*self, *o)
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn sqrt(&self) -> Option<Self> {
        (self.lo() >= 0.0).then(|| Ball::sqrt(*self))
    }
    fn exp(&self) -> Option<Self> {
        // monotone: enclose the endpoint images
        let (lo, hi) = (self.lo().exp(), self.hi().exp());
        Some(Ball::from_interval(lo * (1.0 - 4.0 * f64::EPSILON), hi * (1.0 + 4.0 * f64::EPSILON)))
    }
    fn sin(&self) -> Option<Self> {
        // |sin′| ≤ 1
        let m = self.mid.sin();
        Some(Ball::new(m, self.rad + 4.0 * f64::EPSILON * (1.0 + m.abs())))
    }
    fn cos(&self) -> Option<Self> {
        let m = self.mid.cos();
        Some(Ball::new(m, self.rad + 4.0 * f64::EPSILON * (1.0 + m.abs())))
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Number of variables, i.e. one more than the largest index used.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.arity().max(b.arity()),
        }
    }

    /// Whether the tree only uses `+ − ×` and nonnegative powers.
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Neg(a) => a.is_polynomial(),
            Expr::Pow(a, k) => *k >= 0 && a.is_polynomial(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
            Expr::Div(a, b) => a.is_polynomial() && matches!(**b, Expr::Const(_)),
            _ => false,
        }
    }

    /// Evaluates with `vars[i]` bound to `x_{i+1}`; `vars` must be nonempty.
    pub fn eval<T: Num>(&self, vars: &[T]) -> Option<T> {
        Some(match self {
            Expr::Const(c) => vars[0].lift(c)?,
            Expr::Var(i) => vars.get(*i)?.clone(),
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?)?,
            Expr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?)?,
            Expr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?)?,
            Expr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?)?,
            Expr::Pow(a, k) => a.eval(vars)?.powi(*k)?,
            Expr::Sqrt(a) => a.eval(vars)?.sqrt()?,
            Expr::Exp(a) => a.eval(vars)?.exp()?,
            Expr::Sin(a) => a.eval(vars)?.sin()?,
            Expr::Cos(a) => a.eval(vars)?.cos()?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::SyntaxError { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' ['-'] integer)?
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        let k: i32 = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| Error::SyntaxError { pos: start, msg: "exponent out of range".into() })?;
        Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        // exponent part, only when followed by digits
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mut k = self.pos + 1;
            if k < self.src.len() && matches!(self.src[k], b'+' | b'-') {
                k += 1;
            }
            if k < self.src.len() && self.src[k].is_ascii_digit() {
                while k < self.src.len() && self.src[k].is_ascii_digit() {
                    k += 1;
                }
                self.pos = k;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        parse_rational(text).map(Expr::Const).map_err(|_| Error::SyntaxError { pos: start, msg: format!("bad number {text:?}") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(idx) = name.strip_prefix('x') {
            return match idx.parse::<usize>() {
                Ok(i) if (1..=9).contains(&i) => Ok(Expr::Var(i - 1)),
                _ => Err(Error::SyntaxError { pos: start, msg: format!("unknown variable {name:?}") }),
            };
        }
        let wrap: fn(Box<Expr>) -> Expr = match name {
            "sqrt" => Expr::Sqrt,
            "exp" => Expr::Exp,
            "sin" => Expr::Sin,
            "cos" => Expr::Cos,
            _ => return Err(Error::SyntaxError { pos: start, msg: format!("unknown identifier {name:?}") }),
        };
        if !self.eat(b'(') {
            return Err(self.err("expected '(' after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.err("expected ')'"));
        }
        Ok(wrap(Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = Expr::parse("-x1^2 + 2*x1 - 3/4").unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), -4.0 + 4.0 - 0.75);
        let e = Expr::parse("2^-2 * x2").unwrap();
        assert_eq!(e.arity(), 2);
        assert_eq!(e.eval(&[0.0, 8.0]).unwrap(), 2.0);
        let e = Expr::parse("1.5e-1 * x1").unwrap();
        assert_eq!(e.eval(&[BigRational::from_integer(20.into())]).unwrap(), BigRational::from_integer(3.into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(Expr::parse("x1 + * 2").unwrap_err(), Error::SyntaxError { pos: 5, msg: "unexpected character".into() });
        assert!(matches!(Expr::parse("sqrt(x1"), Err(Error::SyntaxError { pos: 7, .. })));
        assert!(matches!(Expr::parse("y1"), Err(Error::SyntaxError { pos: 0, .. })));
        assert!(matches!(Expr::parse("x1^"), Err(Error::SyntaxError { .. })));
    }
}
