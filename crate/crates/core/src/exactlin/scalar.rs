//! Mode-tagged scalars and the JSON matrix format.
//!
//! Matrices are exchanged as
//! `{"mode": "rational" | "quadratic" | "float", "d": 2, "entries": [[...]]}`.
//! Rational entries are strings such as `"3/4"`, `"-2"` or `"0.4"` (decimals
//! are read exactly). Quadratic entries are either a rational string or a pair
//! `["a", "b"]` meaning `a + b·√d`. Float entries are JSON numbers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use super::field::Field;
use super::matrix::Matrix;
use super::quadratic::{is_squarefree, QuadraticNumber};
use crate::error::{Error, Result};

/// Arithmetic mode of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Rational,
    Quadratic,
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarMode::Rational => "rational",
            ScalarMode::Quadratic => "quadratic",
            ScalarMode::Float => "float",
        })
    }
}

/// A scalar tagged with its mode. Exact and float values never mix
/// implicitly; conversions go through [`Scalar::to_f64`].
#[derive(Clone, Debug)]
pub enum Scalar {
    Rational(BigRational),
    Quadratic(QuadraticNumber),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Rational(_) => ScalarMode::Rational,
            Scalar::Quadratic(_) => ScalarMode::Quadratic,
            Scalar::Float(_) => ScalarMode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => Field::to_f64(r),
            Scalar::Quadratic(q) => q.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Float(_))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            (Scalar::Quadratic(a), Scalar::Quadratic(b)) => a == b,
            (Scalar::Rational(a), Scalar::Quadratic(b)) | (Scalar::Quadratic(b), Scalar::Rational(a)) => {
                b.to_rational().as_ref() == Some(a)
            }
            (Scalar::Float(a), Scalar::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => write!(f, "{r}"),
            Scalar::Quadratic(q) => write!(f, "{q}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Rational(r) => s.serialize_str(&r.to_string()),
            Scalar::Quadratic(q) if q.b().is_zero() => s.serialize_str(&q.a().to_string()),
            Scalar::Quadratic(q) => {
                use serde::ser::SerializeStruct;
                let mut st = s.serialize_struct("Quadratic", 3)?;
                st.serialize_field("a", &q.a().to_string())?;
                st.serialize_field("b", &q.b().to_string())?;
                st.serialize_field("d", &q.d())?;
                st.end()
            }
            Scalar::Float(x) => s.serialize_f64(*x),
        }
    }
}

/// Parses `"p"`, `"p/q"`, or a decimal such as `"-0.25"` or `"1.5e-3"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if num_traits::Zero::is_zero(&d) {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).map_err(|_| bad())?);
    let scale = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let p = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= p;
    } else {
        value /= p;
    }
    Ok(if neg { -value } else { value })
}

fn rational_from_json(v: &Value) -> Result<BigRational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigRational::from_integer(BigInt::from(i)))
            } else {
                parse_rational(&n.to_string())
            }
        }
        _ => Err(Error::InvalidInput(format!("expected a rational entry, found {v}"))),
    }
}

/// Reads one entry of a JSON matrix as a rational.
pub(crate) fn rational_json(v: &Value) -> Result<BigRational> {
    rational_from_json(v)
}

/// Reads one entry of a JSON matrix in `ℚ(√d)`.
pub(crate) fn quadratic_json(v: &Value, d: u64) -> Result<QuadraticNumber> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            let a = rational_from_json(&pair[0])?;
            let b = rational_from_json(&pair[1])?;
            if !b.is_zero() && !is_squarefree(d) {
                return Err(Error::InvalidInput(format!("radicand {d} must be square-free and > 1")));
            }
            Ok(QuadraticNumber::new(a, b, d))
        }
        Value::Object(map) => {
            let a = map.get("a").map(rational_from_json).transpose()?.unwrap_or_else(BigRational::zero);
            let b = map.get("b").map(rational_from_json).transpose()?.unwrap_or_else(BigRational::zero);
            let dd = map.get("d").and_then(Value::as_u64).unwrap_or(d);
            if !b.is_zero() && (!is_squarefree(dd) || (d != 0 && dd != d)) {
                return Err(Error::InvalidInput(format!("bad radicand {dd}")));
            }
            Ok(QuadraticNumber::new(a, b, dd))
        }
        _ => Ok(QuadraticNumber::new(rational_from_json(v)?, BigRational::zero(), d)),
    }
}

/// Reads one entry as `f64`.
pub(crate) fn float_json(v: &Value, d: u64) -> Result<f64> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            let a = float_json(&pair[0], d)?;
            let b = float_json(&pair[1], d)?;
            Ok(a + b * (d as f64).sqrt())
        }
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::InvalidInput(format!("bad number {n}"))),
        Value::String(s) => Ok(Field::to_f64(&parse_rational(s)?)),
        _ => Err(Error::InvalidInput(format!("expected a float entry, found {v}"))),
    }
}

/// A matrix as read from JSON, before it is committed to a field.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInput {
    pub mode: ScalarMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    pub entries: Vec<Vec<Value>>,
}

impl MatrixInput {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("matrix JSON: {e}")))
    }

    fn radicand(&self) -> u64 {
        self.d.unwrap_or(0)
    }

    /// Converts to a matrix over `F`. Exact inputs convert to float freely;
    /// float inputs never convert to an exact field.
    pub fn to_field<F: Field>(&self) -> Result<Matrix<F>> {
        if self.mode == ScalarMode::Float && F::EXACT {
            return Err(Error::ModeMismatch("float matrix requested in an exact mode".into()));
        }
        if self.mode == ScalarMode::Quadratic && F::MODE == "rational" {
            return Err(Error::ModeMismatch("quadratic matrix requested in rational mode".into()));
        }
        let rows = self
            .entries
            .iter()
            .map(|row| row.iter().map(|v| F::from_json(v, self.radicand())).collect::<Result<Vec<F>>>())
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(rows)
    }

    pub fn from_matrix<F: Field>(m: &Matrix<F>) -> Self {
        let mut d = None;
        let entries = m
            .to_rows()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| match x.to_scalar() {
                        Scalar::Rational(r) => Value::String(r.to_string()),
                        Scalar::Quadratic(q) => {
                            if q.b().is_zero() {
                                Value::String(q.a().to_string())
                            } else {
                                d = Some(q.d());
                                Value::Array(vec![Value::String(q.a().to_string()), Value::String(q.b().to_string())])
                            }
                        }
                        Scalar::Float(v) => serde_json::json!(v),
                    })
                    .collect()
            })
            .collect();
        let mode = match F::MODE {
            "rational" => ScalarMode::Rational,
            "quadratic" => ScalarMode::Quadratic,
            _ => ScalarMode::Float,
        };
        Self { mode, d, entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.4").unwrap(), q(2, 5));
        assert_eq!(parse_rational("-2.6").unwrap(), q(-13, 5));
        assert_eq!(parse_rational("1.5e-3").unwrap(), q(3, 2000));
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn quadratic_equals_rational_when_b_vanishes() {
        let a = Scalar::Quadratic(QuadraticNumber::new(q(1, 2), q(0, 1), 2));
        assert_eq!(a, Scalar::Rational(q(1, 2)));
    }

    #[test]
    fn matrix_roundtrip() {
        let text = r#"{"mode":"quadratic","d":2,"entries":[["0",["1","1/2"]],["3/4","-1"]]}"#;
        let input = MatrixInput::from_json_str(text).unwrap();
        let m: Matrix<QuadraticNumber> = input.to_field().unwrap();
        assert_eq!(m.get(0, 1), &QuadraticNumber::new(q(1, 1), q(1, 2), 2));
        let back = MatrixInput::from_matrix(&m);
        let m2: Matrix<QuadraticNumber> = back.to_field().unwrap();
        assert_eq!(m, m2);
        assert!(input.to_field::<BigRational>().is_err());
    }
}
