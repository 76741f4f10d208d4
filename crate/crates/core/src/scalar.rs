//! Coefficient fields for jets.
//!
//! Two modes are supported: exact rationals ([`Rational`]) and IEEE `f64`.
//! Every jet, matrix and solver is generic over [`Scalar`], so the two modes
//! can never be mixed inside one computation.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::{BigRational, Signed, ToPrimitive, Zero, One};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Which coefficient field a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// The exact value, `None` in float mode.
    fn to_rational(&self) -> Option<Rational>;

    /// Multiplicative inverse, `None` for zero.
    fn inv(&self) -> Option<Self>;

    /// Non-negative square root. Exact mode only succeeds on squares of rationals.
    fn sqrt(&self) -> Option<Self>;

    /// `(sin x, cos x)`. Exact mode only succeeds at `x = 0`.
    fn sin_cos(&self) -> Option<(Self, Self)>;

    /// `exp x`. Exact mode only succeeds at `x = 0`.
    fn exp(&self) -> Option<Self>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Sign of the value; zero counts as non-positive.
    fn is_positive(&self) -> bool {
        self.to_f64() > 0.0 && !self.is_zero()
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            Some(Rational::new(n, d))
        } else {
            None
        }
    }
    fn sin_cos(&self) -> Option<(Self, Self)> {
        Zero::is_zero(self).then(|| (Zero::zero(), One::one()))
    }
    fn exp(&self) -> Option<Self> {
        Zero::is_zero(self).then(One::one)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;
    fn to_rational(&self) -> Option<Rational> {
        None
    }

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn inv(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
    fn sin_cos(&self) -> Option<(Self, Self)> {
        Some(f64::sin_cos(*self))
    }
    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }
}

/// Parses `"3"`, `"-1/4"`, or a decimal like `"0.125"` into a rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if Zero::is_zero(&d) {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Some(if negative { -r } else { r });
    }
    text.parse::<BigInt>().ok().map(Rational::from_integer)
}
