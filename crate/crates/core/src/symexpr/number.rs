//! Numeric constants carried inside expression trees.
//!
//! Constants are exact rationals unless a float has entered the tree
//! (substituted bindings, folded float arithmetic). Any operation that mixes
//! the two produces a float.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Number::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Number::int(0)
    }

    pub fn one() -> Self {
        Number::int(1)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(f) => *f == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(f) => *f == 1.0,
        }
    }

    pub fn is_minus_one(&self) -> bool {
        match self {
            Number::Rational(r) => *r == -BigRational::one(),
            Number::Float(f) => *f == -1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(f) => *f < 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Rational(_))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Number::Rational(r) => r.is_integer(),
            Number::Float(_) => false,
        }
    }

    /// Small integer value, if this is an exact integer that fits.
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Number::Rational(r) if r.is_integer() => r.to_integer().to_i64(),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(r) => rational_to_f64(r),
            Number::Float(f) => *f,
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a + b),
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => Number::Rational(a * b),
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Rational(r) => Number::Rational(-r),
            Number::Float(f) => Number::Float(-f),
        }
    }

    pub fn abs(&self) -> Number {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// `None` for division by zero.
    pub fn recip(&self) -> Option<Number> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Number::Rational(r) => Number::Rational(r.recip()),
            Number::Float(f) => Number::Float(1.0 / f),
        })
    }

    /// Integer power; `None` when raising zero to a negative power.
    pub fn powi(&self, n: i64) -> Option<Number> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        Some(match self {
            Number::Rational(r) => {
                let e = i32::try_from(n).ok()?;
                Number::Rational(num_traits::pow::Pow::pow(r, e))
            }
            Number::Float(f) => Number::Float(f.powi(n as i32)),
        })
    }

    /// Exact rational root `self^(1/q)` when it exists (`q > 0`).
    pub fn exact_root(&self, q: u32) -> Option<Number> {
        let r = self.as_rational()?;
        if r.is_negative() {
            return None;
        }
        let n = integer_root(r.numer(), q)?;
        let d = integer_root(r.denom(), q)?;
        Some(Number::Rational(BigRational::new(n, d)))
    }

    /// Content used by factor normalisation: the value itself for leading
    /// coefficients.
    pub fn gcd_with(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => {
                let n = a.numer().gcd(b.numer());
                let d = a.denom().lcm(b.denom());
                if n.is_zero() {
                    Number::one()
                } else {
                    Number::Rational(BigRational::new(n, d))
                }
            }
            _ => Number::one(),
        }
    }

    pub fn total_cmp(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Rational(_), Number::Float(_)) => Ordering::Less,
            (Number::Float(_), Number::Rational(_)) => Ordering::Greater,
            (Number::Float(a), Number::Float(b)) => a.total_cmp(b),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl std::hash::Hash for Number {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Number::Float(f) => {
                1u8.hash(state);
                f.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Number::Float(x) => write!(f, "{}", format_float_literal(*x)),
        }
    }
}

/// A float literal the expression grammar accepts back (always carries a
/// fraction or exponent part).
pub fn format_float_literal(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

fn integer_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if q == 1 {
        return Some(n.clone());
    }
    let root = n.nth_root(q);
    if num_traits::pow::Pow::pow(&root, q) == *n {
        Some(root)
    } else {
        None
    }
}

/// Parses a decimal literal (`12`, `1.25`, `3e-4`, `2.5E+3`) exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow::Pow::pow(&ten, scale as u64))
    } else {
        BigRational::new(numer, num_traits::pow::Pow::pow(&ten, (-scale) as u64))
    };
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal("2.5").unwrap(), BigRational::new(5.into(), 2.into()));
        assert_eq!(parse_decimal("1e-3").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert_eq!(parse_decimal("12").unwrap(), BigRational::from_integer(12.into()));
        assert!(parse_decimal(".").is_none());
    }

    #[test]
    fn mixed_arithmetic_goes_float() {
        let x = Number::ratio(1, 2).add(&Number::Float(0.25));
        assert!(matches!(x, Number::Float(v) if v == 0.75));
        assert_eq!(Number::ratio(2, 3).mul(&Number::int(3)), Number::int(2));
    }

    #[test]
    fn roots_and_powers() {
        assert_eq!(Number::ratio(4, 9).exact_root(2), Some(Number::ratio(2, 3)));
        assert_eq!(Number::int(2).exact_root(2), None);
        assert_eq!(Number::int(2).powi(-2), Some(Number::ratio(1, 4)));
        assert_eq!(Number::zero().powi(-1), None);
    }

    #[test]
    fn float_literal_reparses() {
        assert_eq!(format_float_literal(2.0), "2.0");
        assert_eq!(format_float_literal(1e-7), "1e-7");
    }
}
