//! Exact constants `A(m, α)`, `B(m, α)` and the characteristic polynomial
//! `P_{m,α}(λ) = ∏_{j=1}^{m} (λ² − (2j−1−α)²/4)`.
//!
//! Every quantity here is a polynomial in α, so a rational α keeps the whole
//! computation in exact arithmetic. Irrational α is only available through
//! [`Alpha::approx`], which evaluates the same formulas in 128-bit binary
//! floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Mantissa bits used by approximate mode.
pub const APPROX_PREC: u32 = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("zero denominator in rational alpha")]
    ZeroDenominator,
    #[error("cannot parse {0:?} as a decimal or p/q rational")]
    Parse(String),
    #[error("order m must be at least 1")]
    ZeroOrder,
    #[error("operation requires exact mode")]
    NotExact,
}

/// A real number that is either an exact rational or a 128-bit float.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(Rational),
    Approx(Float),
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number::Exact(Rational::from(v))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Number::Exact(Rational::from((p, q)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Number::Exact(r) => Some(r),
            Number::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64(),
            Number::Approx(f) => f.to_f64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.signum() == 0
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        let ord = match self {
            Number::Exact(r) => r.cmp0(),
            Number::Approx(f) => f.cmp0().unwrap_or(Ordering::Equal),
        };
        match ord {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    pub fn abs(&self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(r.clone().abs()),
            Number::Approx(f) => Number::Approx(f.clone().abs()),
        }
    }

    pub fn square(&self) -> Number {
        self * self
    }

    fn to_float(&self) -> Float {
        match self {
            Number::Exact(r) => Float::with_val(APPROX_PREC, r),
            Number::Approx(f) => f.clone(),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Approx(x) => write!(f, "{}", x.to_string_radix(10, Some(24))),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

macro_rules! number_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Number> for &Number {
            type Output = Number;
            fn $method(self, rhs: &Number) -> Number {
                match (self, rhs) {
                    (Number::Exact(a), Number::Exact(b)) => Number::Exact(Rational::from(a.$method(b))),
                    _ => {
                        let (a, b) = (self.to_float(), rhs.to_float());
                        Number::Approx(Float::with_val(APPROX_PREC, a.$method(&b)))
                    }
                }
            }
        }
        impl $trait<Number> for Number {
            type Output = Number;
            fn $method(self, rhs: Number) -> Number {
                (&self).$method(&rhs)
            }
        }
    };
}

number_binop!(Add, add);
number_binop!(Sub, sub);
number_binop!(Mul, mul);

impl Neg for &Number {
    type Output = Number;
    fn neg(self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(Rational::from(-r)),
            Number::Approx(f) => Number::Approx(Float::with_val(APPROX_PREC, -f)),
        }
    }
}

impl Number {
    fn recip(&self) -> Number {
        match self {
            Number::Exact(r) => Number::Exact(r.clone().recip()),
            Number::Approx(f) => Number::Approx(f.clone().recip()),
        }
    }
}

/// The power-weight exponent α.
#[derive(Debug, Clone, PartialEq)]
pub struct Alpha(Number);

impl Alpha {
    pub fn zero() -> Self {
        Alpha(Number::int(0))
    }

    pub fn int(v: i64) -> Self {
        Alpha(Number::int(v))
    }

    /// Exact α = p/q.
    pub fn from_ratio(p: i64, q: i64) -> Result<Self, ExactError> {
        if q == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(Alpha(Number::ratio(p, q)))
    }

    pub fn from_rational(r: Rational) -> Self {
        Alpha(Number::Exact(r))
    }

    /// Approximate mode; exact-equality checks are skipped for such values.
    pub fn approx(v: f64) -> Self {
        Alpha(Number::Approx(Float::with_val(APPROX_PREC, v)))
    }

    pub fn approx_float(v: Float) -> Self {
        Alpha(Number::Approx(Float::with_val(APPROX_PREC, v)))
    }

    pub fn value(&self) -> &Number {
        &self.0
    }

    pub fn is_exact(&self) -> bool {
        self.0.is_exact()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Whether α ∈ {2j−1 : 1 ≤ j ≤ ell}. `None` in approximate mode.
    pub fn is_exceptional(&self, ell: u32) -> Option<bool> {
        let r = self.0.as_rational()?;
        if !r.denom().eq(&Integer::from(1)) {
            return Some(false);
        }
        let n = r.numer();
        let hit = (1..=ell as i64).any(|j| *n == 2 * j - 1);
        Some(hit)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Alpha {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Alpha::from_rational)
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"p/q"`, an integer, or a decimal such as `"-1.25e-3"` into an
/// exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let err = || ExactError::Parse(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: Integer = p.trim().parse().map_err(|_| err())?;
        let q: Integer = q.trim().parse().map_err(|_| err())?;
        if q == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        return Ok(Rational::from((p, q)));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| err())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: Integer = all.parse().map_err(|_| err())?;
    let scale = exp - frac_part.len() as i64;
    if scale.unsigned_abs() > 10_000 {
        return Err(err());
    }
    let pow = Integer::from(Integer::u_pow_u(10, scale.unsigned_abs() as u32));
    let mut r = if scale >= 0 {
        Rational::from(numer * pow)
    } else {
        Rational::from((numer, pow))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// (2j − 1 − α) as an exact or approximate number.
fn shifted(j: u32, alpha: &Alpha) -> Number {
    &Number::int(2 * j as i64 - 1) - alpha.value()
}

/// `A(m, α) = ∏_{j=1}^{m} ((2j−1−α)/2)²`.
pub fn constant_a(m: u32, alpha: &Alpha) -> Number {
    let quarter = Number::ratio(1, 4);
    (1..=m).fold(Number::int(1), |acc, j| &acc * &(&shifted(j, alpha).square() * &quarter))
}

/// `B(m, α) = 4^{−m} Σ_{k=1}^{m} ∏_{j≠k} (2j−1−α)²`.
pub fn constant_b(m: u32, alpha: &Alpha) -> Number {
    let squares: Vec<Number> = (1..=m).map(|j| shifted(j, alpha).square()).collect();
    let mut sum = Number::int(0);
    for k in 0..squares.len() {
        let prod = squares
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .fold(Number::int(1), |acc, (_, s)| &acc * s);
        sum = &sum + &prod;
    }
    let scale = Number::Exact(Rational::from((1, Integer::from(Integer::u_pow_u(4, m)))));
    &sum * &scale
}

/// `Ã(m, α) = 2^{−m} (2m−1−α)(2m−3−α)⋯(1−α)`, the signed square root of
/// `A(m, α)` appearing as the coefficient of `(x^{(2m−1−α)/2})^{(m)}`.
pub fn signed_root_a(m: u32, alpha: &Alpha) -> Number {
    let half = Number::ratio(1, 2);
    (1..=m).fold(Number::int(1), |acc, j| &acc * &(&shifted(j, alpha) * &half))
}

pub fn constant_a_f64(m: u32, alpha: &Alpha) -> f64 {
    constant_a(m, alpha).to_f64()
}

pub fn constant_b_f64(m: u32, alpha: &Alpha) -> f64 {
    constant_b(m, alpha).to_f64()
}

/// Coefficients `c₀ … c₂ₘ` of `P_{m,α}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub m: u32,
    pub alpha: Alpha,
    pub coeffs: Vec<Number>,
}

/// A failed coefficient property, identified by its list item.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoefficientViolation {
    #[error("(i) c_{index} is odd-indexed but nonzero")]
    OddNonzero { index: usize },
    #[error("(ii) c_{index} has the wrong sign")]
    EvenSign { index: usize },
    #[error("(iii) |c_0| differs from A(m, alpha)")]
    ConstantTerm,
    #[error("(iv) |c_2| differs from 4 B(m, alpha)")]
    QuadraticTerm,
    #[error("(v) leading coefficient is not 1")]
    Leading,
    #[error("table is not exact")]
    NotExact,
}

impl CoefficientTable {
    pub fn coeff(&self, index: usize) -> &Number {
        &self.coeffs[index]
    }

    /// `|c_{2j}|` rounded to double.
    pub fn abs_even(&self, j: u32) -> f64 {
        self.coeffs[2 * j as usize].abs().to_f64()
    }

    /// Horner evaluation of `P_{m,α}(λ)`.
    pub fn eval(&self, lambda: &Number) -> Number {
        self.coeffs
            .iter()
            .rev()
            .fold(Number::int(0), |acc, c| &(&acc * lambda) + c)
    }

    /// Checks coefficient properties (i)–(v) with exact rational equality.
    pub fn check_properties(&self) -> Result<(), CoefficientViolation> {
        if !self.alpha.is_exact() || self.coeffs.iter().any(|c| !c.is_exact()) {
            return Err(CoefficientViolation::NotExact);
        }
        let m = self.m as usize;
        for j in 1..=m {
            if !self.coeffs[2 * j - 1].is_zero() {
                return Err(CoefficientViolation::OddNonzero { index: 2 * j - 1 });
            }
        }
        for j in 0..=m {
            let c = &self.coeffs[2 * j];
            let expected = if (m - j).is_multiple_of(2) { 1 } else { -1 };
            if !c.is_zero() && c.signum() != expected {
                return Err(CoefficientViolation::EvenSign { index: 2 * j });
            }
        }
        if self.coeffs[0].abs() != constant_a(self.m, &self.alpha) {
            return Err(CoefficientViolation::ConstantTerm);
        }
        if self.coeffs[2].abs() != &Number::int(4) * &constant_b(self.m, &self.alpha) {
            return Err(CoefficientViolation::QuadraticTerm);
        }
        if self.coeffs[2 * m] != Number::int(1) {
            return Err(CoefficientViolation::Leading);
        }
        Ok(())
    }
}

/// Expands `∏_{j=1}^{m} (λ² − (2j−1−α)²/4)` by repeated convolution with
/// quadratic factors.
pub fn expand_characteristic(m: u32, alpha: &Alpha) -> Result<CoefficientTable, ExactError> {
    if m == 0 {
        return Err(ExactError::ZeroOrder);
    }
    let quarter = Number::ratio(1, 4);
    let mut poly = vec![Number::int(1)];
    for j in 1..=m {
        let r2 = &shifted(j, alpha).square() * &quarter;
        let mut next = vec![Number::int(0); poly.len() + 2];
        for (i, c) in poly.iter().enumerate() {
            next[i + 2] = &next[i + 2] + c;
            next[i] = &next[i] - &(c * &r2);
        }
        poly = next;
    }
    Ok(CoefficientTable { m, alpha: alpha.clone(), coeffs: poly })
}

/// The roots `±(2j−1−α)/2`, `j = 1..m`, ordered `+r₁, −r₁, +r₂, −r₂, …`.
pub fn characteristic_roots(m: u32, alpha: &Alpha) -> Vec<Number> {
    let half = Number::ratio(1, 2);
    (1..=m)
        .flat_map(|j| {
            let r = &shifted(j, alpha) * &half;
            let neg = -&r;
            [r, neg]
        })
        .collect()
}

/// `Σ_{j=1}^{m} (2j−1−α)^{−2}`; `None` on the exceptional set.
pub fn inverse_square_sum(m: u32, alpha: &Alpha) -> Option<Number> {
    let mut sum = Number::int(0);
    for j in 1..=m {
        let s = shifted(j, alpha);
        if s.is_zero() {
            return None;
        }
        sum = &sum + &s.square().recip();
    }
    Some(sum)
}

/// `(2m−1)!!² / 2^{2m}` computed from the double factorial directly.
pub fn double_factorial_constant(m: u32) -> Rational {
    let df = (1..=m).fold(Integer::from(1), |acc, j| acc * (2 * j - 1));
    Rational::from((df.square(), Integer::from(Integer::u_pow_u(2, 2 * m))))
}
