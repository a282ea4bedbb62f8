//! Field elements: exact rationals or f64, selected by the type parameter.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Relative pivot threshold for rank decisions in float mode.
pub const FLOAT_RANK_TOL: f64 = 1e-10;

/// Relative threshold below which a float determinant counts as zero. Kept
/// near machine precision: Veronese configurations at n ≥ 5 have legitimately
/// tiny normalized volumes.
pub const FLOAT_DET_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float64,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float64" | "float" => Ok(Backend::Float64),
            other => Err(format!("unknown backend '{other}'")),
        }
    }
}

/// Arithmetic needed by every algorithm in the crate.
///
/// `BigRational` never rounds; `f64` decides zero-ness against a relative scale.
pub trait Scalar: Signed + Clone + Debug + PartialOrd + Send + Sync + 'static {
    const BACKEND: Backend;

    fn from_int(v: i64) -> Self;
    fn from_frac(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }
    /// Exact conversion for floats given as data (exact mode keeps every bit).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// Treat `self` as zero relative to magnitude `scale`.
    fn negligible(&self, scale: &Self) -> bool;

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match Self::BACKEND {
            Backend::Exact => self == other,
            Backend::Float64 => {
                let (a, b) = (self.to_f64(), other.to_f64());
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            }
        }
    }

    /// Natural log, computed in f64 in both backends.
    fn ln(&self) -> f64 {
        self.to_f64().ln()
    }
}

impl Scalar for BigRational {
    const BACKEND: Backend = Backend::Exact;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_frac(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(BigRational::zero)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // huge numerators and denominators: divide in log space
            let n = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = self.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }
    fn negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }
    fn ln(&self) -> f64 {
        // log of p/q without overflowing either part
        let lg = |b: &BigInt| -> f64 {
            let bits = b.bits();
            if bits < 1000 {
                b.to_f64().unwrap().abs().ln()
            } else {
                let shift = bits - 60;
                let top = (b >> shift).to_f64().unwrap().abs();
                top.ln() + shift as f64 * std::f64::consts::LN_2
            }
        };
        if self.is_positive() {
            lg(self.numer()) - lg(self.denom())
        } else {
            f64::NAN
        }
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float64;

    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn negligible(&self, scale: &Self) -> bool {
        self.abs() <= FLOAT_RANK_TOL * scale.abs().max(f64::MIN_POSITIVE)
    }
}

/// Real value or the point at infinity of ℝ ∪ {∞}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Extended<S> {
    Finite(S),
    Infinity,
}

impl<S: Scalar> Extended<S> {
    pub fn finite(&self) -> Option<&S> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinity)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64(),
            Extended::Infinity => f64::INFINITY,
        }
    }
}

/// Parse "p/q", an integer, or a decimal literal into a scalar.
/// Decimals are read exactly in base ten for the exact backend.
pub fn parse_scalar<S: Scalar>(text: &str) -> Option<S> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(from_bigrational(&BigRational::new(p, q)));
    }
    if let Ok(i) = t.parse::<BigInt>() {
        return Some(from_bigrational(&BigRational::from_integer(i)));
    }
    let v: f64 = t.parse().ok()?;
    if !v.is_finite() {
        return None;
    }
    match S::BACKEND {
        Backend::Float64 => Some(S::from_f64(v)),
        Backend::Exact => decimal_rational(t).map(|r| from_bigrational(&r)),
    }
}

fn decimal_rational(t: &str) -> Option<BigRational> {
    let lower = t.to_ascii_lowercase();
    let (mantissa, exp) = match lower.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i32>().ok()?),
        None => (lower.clone(), 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((&mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Convert an exact rational into either backend.
pub fn from_bigrational<S: Scalar>(r: &BigRational) -> S {
    match S::BACKEND {
        Backend::Exact => {
            // S is BigRational; round-trip through the generic interface
            let num = S::from_bigint(r.numer());
            let den = S::from_bigint(r.denom());
            num / den
        }
        Backend::Float64 => S::from_f64(Scalar::to_f64(r)),
    }
}

trait FromBigInt {
    fn from_bigint(b: &BigInt) -> Self;
}

impl<S: Scalar> FromBigInt for S {
    fn from_bigint(b: &BigInt) -> Self {
        // base 2^32 digits keep this exact for rationals
        let (sign, digits) = b.to_u32_digits();
        let base = S::from_int(1i64 << 32);
        let mut acc = S::zero();
        for d in digits.iter().rev() {
            acc = acc * base.clone() + S::from_int(*d as i64);
        }
        if sign == num_bigint::Sign::Minus {
            -acc
        } else {
            acc
        }
    }
}

/// Largest absolute value among the inputs (zero for an empty slice).
pub fn max_abs<S: Scalar>(values: &[S]) -> S {
    values
        .iter()
        .map(|v| v.abs())
        .fold(S::zero(), |m, v| if v > m { v } else { m })
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        let r: BigRational = parse_scalar("3/4").unwrap();
        assert_eq!(r, rational(3, 4));
        let d: BigRational = parse_scalar("-0.125").unwrap();
        assert_eq!(d, rational(-1, 8));
        let e: BigRational = parse_scalar("1.5e2").unwrap();
        assert_eq!(e, rational(150, 1));
        let f: f64 = parse_scalar("1/3").unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
        assert!(parse_scalar::<f64>("1/0").is_none());
        assert!(parse_scalar::<f64>("abc").is_none());
    }

    #[test]
    fn exact_log_of_large_rationals() {
        let big = BigRational::from_integer(num_traits::pow(BigInt::from(10), 400));
        assert!((Scalar::ln(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn float_negligible_is_relative() {
        assert!(1e-12f64.negligible(&1.0));
        assert!(!1e-12f64.negligible(&1e-6));
    }
}
