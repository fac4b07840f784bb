use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An extended exponent value in `[1, +inf]`, with infinity kept symbolic.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Exp {
    Finite(f64),
    Infinity,
}

impl Exp {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Exp::Infinity)
    }

    /// Finite value, panics on infinity. Callers branch on `is_infinite` first.
    pub fn finite(&self) -> f64 {
        match self {
            Exp::Finite(v) => *v,
            Exp::Infinity => panic!("expected a finite exponent"),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exp::Finite(v) => *v,
            Exp::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::Finite(v) => write!(f, "{v}"),
            Exp::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Exp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exp::Finite(v) => s.serialize_f64(*v),
            Exp::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() => Ok(Exp::Finite(v)),
            Raw::Num(_) => Ok(Exp::Infinity),
            Raw::Str(s) if s == "inf" || s == "+inf" || s == "infinity" => Ok(Exp::Infinity),
            Raw::Str(s) => Err(D::Error::custom(format!("bad exponent {s:?}"))),
        }
    }
}

/// The triple `(p, p', lambda)` with `1/p + 1/p' = 1` and `lambda = max(p, p')`.
///
/// `p = 1` pairs with `p' = +inf` symbolically; no floating infinity enters
/// any arithmetic. `lambda >= 2` always.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct Exponents {
    pub p: Exp,
    pub p_prime: Exp,
    pub lambda: Exp,
}

impl Exponents {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::BadExponent(p));
        }
        if p == 1.0 {
            return Ok(Exponents {
                p: Exp::Finite(1.0),
                p_prime: Exp::Infinity,
                lambda: Exp::Infinity,
            });
        }
        if p.is_infinite() {
            return Ok(Exponents {
                p: Exp::Infinity,
                p_prime: Exp::Finite(1.0),
                lambda: Exp::Infinity,
            });
        }
        let p_prime = p / (p - 1.0);
        Ok(Exponents {
            p: Exp::Finite(p),
            p_prime: Exp::Finite(p_prime),
            lambda: Exp::Finite(p.max(p_prime)),
        })
    }

    pub fn infinity() -> Self {
        Exponents::new(f64::INFINITY).expect("valid")
    }

    /// Parses "2", "1.5", "inf".
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inf" | "+inf" | "infinity" | "Inf" => Exponents::new(f64::INFINITY),
            _ => {
                let v: f64 = s.parse().map_err(|_| Error::BadExponent(f64::NAN))?;
                Exponents::new(v)
            }
        }
    }

    /// `2^(1/lambda)`; equals 1 when lambda is infinite.
    pub fn two_pow_inv_lambda(&self) -> f64 {
        match self.lambda {
            Exp::Finite(l) => 2f64.powf(1.0 / l),
            Exp::Infinity => 1.0,
        }
    }
}
