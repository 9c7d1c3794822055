//! Angles given either as plain radians or as exact rational multiples of π.
//!
//! Inputs such as `"pi*1/2"`, `"2*pi/3"`, `"-pi/3"` or `"pi"` are parsed
//! symbolically and keep their exact value, so that equalities such as the
//! Gauss–Bonnet condition can be decided exactly. Plain numbers (JSON numbers
//! or numeric strings) are radians and carry no exact form, except zero.

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AngleParseError {
    #[error("empty angle expression")]
    Empty,
    #[error("unexpected character {0:?} in angle expression")]
    UnexpectedChar(char),
    #[error("malformed angle expression {0:?}")]
    Malformed(String),
    #[error("division by zero in angle expression {0:?}")]
    DivisionByZero(String),
    #[error("angle expression {0:?} uses pi more than once")]
    PiPower(String),
    #[error("angle expression {0:?} overflows")]
    Overflow(String),
    #[error("angle expression {0:?} is not finite")]
    NotFinite(String),
}

/// A real angle in radians, with an exact rational coefficient of π when known.
#[derive(Clone, Copy, Debug)]
pub struct Angle {
    value: f64,
    exact: Option<Rational64>,
}

impl Angle {
    pub fn radians(value: f64) -> Angle {
        let exact = if value == 0.0 { Some(Rational64::from_integer(0)) } else { None };
        Angle { value, exact }
    }

    /// The exact angle `num/den · π`.
    pub fn pi_frac(num: i64, den: i64) -> Angle {
        Angle::pi_multiple(Rational64::new(num, den))
    }

    pub fn pi_multiple(r: Rational64) -> Angle {
        Angle { value: PI * (*r.numer() as f64) / (*r.denom() as f64), exact: Some(r) }
    }

    pub fn zero() -> Angle {
        Angle::pi_frac(0, 1)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Exact coefficient of π, if the angle was given symbolically.
    pub fn exact(&self) -> Option<Rational64> {
        self.exact
    }

    /// Sign of the angle: exact when possible, otherwise with an absolute
    /// tolerance (values within `tol` of zero compare as zero).
    pub fn sign(&self, tol: f64) -> std::cmp::Ordering {
        match self.exact {
            Some(r) => r.cmp(&Rational64::from_integer(0)),
            None => {
                if self.value > tol {
                    std::cmp::Ordering::Greater
                } else if self.value < -tol {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            }
        }
    }

    pub fn parse(s: &str) -> Result<Angle, AngleParseError> {
        Parser::new(s).parse()
    }

    fn combine(self, other: Angle, f: impl Fn(f64, f64) -> f64, g: impl Fn(Rational64, Rational64) -> Option<Rational64>) -> Angle {
        let exact = match (self.exact, other.exact) {
            (Some(a), Some(b)) => g(a, b),
            _ => None,
        };
        Angle { value: f(self.value, other.value), exact }
    }
}

impl Default for Angle {
    fn default() -> Self {
        Angle::zero()
    }
}

impl PartialEq for Angle {
    fn eq(&self, other: &Self) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.value == other.value,
        }
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        self.combine(rhs, |a, b| a + b, |a, b| a.checked_add(&b))
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        self.combine(rhs, |a, b| a - b, |a, b| a.checked_sub(&b))
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle { value: -self.value, exact: self.exact.map(|r| -r) }
    }
}

impl Mul<i64> for Angle {
    type Output = Angle;
    fn mul(self, k: i64) -> Angle {
        Angle { value: self.value * k as f64, exact: self.exact.and_then(|r| r.checked_mul(&Rational64::from_integer(k))) }
    }
}

impl std::iter::Sum for Angle {
    fn sum<I: Iterator<Item = Angle>>(iter: I) -> Angle {
        iter.fold(Angle::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.numer() == 0 => write!(f, "0"),
            Some(r) if *r.denom() == 1 => match *r.numer() {
                1 => write!(f, "pi"),
                -1 => write!(f, "-pi"),
                n => write!(f, "{n}*pi"),
            },
            Some(r) => match *r.numer() {
                1 => write!(f, "pi/{}", r.denom()),
                -1 => write!(f, "-pi/{}", r.denom()),
                n => write!(f, "{n}*pi/{}", r.denom()),
            },
            None => write!(f, "{}", self.value),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.exact {
            Some(r) if *r.numer() != 0 => s.serialize_str(&self.to_string()),
            _ => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Angle, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a symbolic multiple of pi")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Angle, E> {
                if v.is_finite() {
                    Ok(Angle::radians(v))
                } else {
                    Err(E::custom("angle is not finite"))
                }
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle::radians(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle::radians(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Angle, E> {
                Angle::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Token {
    Num(f64, Option<i64>),
    Pi,
    Star,
    Slash,
    Plus,
    Minus,
}

struct Parser<'a> {
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src }
    }

    fn tokens(&self) -> Result<Vec<Token>, AngleParseError> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' => i += 1,
                '*' => {
                    out.push(Token::Star);
                    i += 1
                }
                '/' => {
                    out.push(Token::Slash);
                    i += 1
                }
                '+' => {
                    out.push(Token::Plus);
                    i += 1
                }
                '-' => {
                    out.push(Token::Minus);
                    i += 1
                }
                'p' | 'P' | 'π' => {
                    if self.src[i..].to_ascii_lowercase().starts_with("pi") {
                        out.push(Token::Pi);
                        i += 2;
                    } else {
                        return Err(AngleParseError::UnexpectedChar(c));
                    }
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                        i += 1;
                    }
                    // Optional exponent, only when followed by digits.
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            while j < bytes.len() && bytes[j].is_ascii_digit() {
                                j += 1;
                            }
                            i = j;
                        }
                    }
                    let text = &self.src[start..i];
                    let value: f64 = text.parse().map_err(|_| AngleParseError::Malformed(self.src.to_string()))?;
                    let int = if text.bytes().all(|b| b.is_ascii_digit()) { text.parse::<i64>().ok() } else { None };
                    out.push(Token::Num(value, int));
                }
                _ => {
                    // The π glyph is multi-byte; handle it before rejecting.
                    if self.src[i..].starts_with('π') {
                        out.push(Token::Pi);
                        i += 'π'.len_utf8();
                    } else {
                        let ch = self.src[i..].chars().next().unwrap_or('?');
                        return Err(AngleParseError::UnexpectedChar(ch));
                    }
                }
            }
        }
        Ok(out)
    }

    /// expr := sign? factor (('*' | '/')? factor)*, where juxtaposition
    /// (`2pi`) means multiplication.
    fn parse(&self) -> Result<Angle, AngleParseError> {
        let toks = self.tokens()?;
        if toks.is_empty() {
            return Err(AngleParseError::Empty);
        }
        let malformed = || AngleParseError::Malformed(self.src.to_string());
        let mut pos = 0;
        let mut negative = false;
        while pos < toks.len() && matches!(toks[pos], Token::Plus | Token::Minus) {
            if toks[pos] == Token::Minus {
                negative = !negative;
            }
            pos += 1;
        }
        let mut value = 1.0f64;
        let mut exact: Option<Rational64> = Some(Rational64::from_integer(1));
        let mut pis = 0;
        let mut expect_factor = true;
        let mut divide = false;
        while pos < toks.len() {
            let tok = toks[pos];
            pos += 1;
            match tok {
                Token::Num(v, int) => {
                    if !expect_factor && !matches!(toks.get(pos.wrapping_sub(2)), Some(Token::Pi)) {
                        return Err(malformed());
                    }
                    if divide {
                        if v == 0.0 {
                            return Err(AngleParseError::DivisionByZero(self.src.to_string()));
                        }
                        value /= v;
                        exact = match (exact, int) {
                            (Some(r), Some(n)) => r.checked_div(&Rational64::from_integer(n)),
                            _ => None,
                        };
                    } else {
                        value *= v;
                        exact = match (exact, int) {
                            (Some(r), Some(n)) => r.checked_mul(&Rational64::from_integer(n)),
                            _ => None,
                        };
                    }
                    expect_factor = false;
                    divide = false;
                }
                Token::Pi => {
                    if divide {
                        return Err(malformed());
                    }
                    pis += 1;
                    if pis > 1 {
                        return Err(AngleParseError::PiPower(self.src.to_string()));
                    }
                    expect_factor = false;
                }
                Token::Star | Token::Slash => {
                    if expect_factor {
                        return Err(malformed());
                    }
                    divide = tok == Token::Slash;
                    expect_factor = true;
                }
                Token::Plus | Token::Minus => return Err(malformed()),
            }
        }
        if expect_factor {
            return Err(malformed());
        }
        if negative {
            value = -value;
            exact = exact.map(|r| -r);
        }
        if pis == 1 {
            let v = value * PI;
            if !v.is_finite() {
                return Err(AngleParseError::NotFinite(self.src.to_string()));
            }
            match exact {
                Some(r) => Ok(Angle { value: PI * (*r.numer() as f64) / (*r.denom() as f64), exact: Some(r) }),
                None => Ok(Angle { value: v, exact: None }),
            }
        } else {
            if !value.is_finite() {
                return Err(AngleParseError::NotFinite(self.src.to_string()));
            }
            Ok(Angle::radians(value))
        }
    }
}
