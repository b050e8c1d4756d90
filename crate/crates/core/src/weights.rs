//! Iterated logarithms `ln_j`, normalized iterated logarithms `L_j`, the
//! iterated exponentials `e_j`, and the composite right-hand-side weights.
//!
//! Transcendental evaluation runs in MPFR with a 64-bit mantissa and rounds to
//! `f64` only when a value leaves this module. The `N = ∞` series of the `L`
//! variants is the exception, see [`l_series_tail`].
//!
//! Argument direction per variant (`ρ` the interval end, `γ`/`τ` the anchor):
//!
//! | variant      | interval | hypothesis   | log argument |
//! |--------------|----------|--------------|--------------|
//! | `ExteriorLn` | `(ρ, ∞)` | `ρ ≥ e_N γ`  | `ln_p(x/γ)`  |
//! | `ExteriorL`  | `(ρ, ∞)` | `ρ ≥ τ`      | `L_p(τ/x)`   |
//! | `InteriorLn` | `(0, ρ)` | `γ ≥ e_N ρ`  | `ln_p(γ/x)`  |
//! | `InteriorL`  | `(0, ρ)` | `τ ≥ ρ`      | `L_p(x/τ)`   |

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rug::float::Round;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::exact::{constant_a_f64, constant_b_f64, Alpha, CoefficientTable};

/// Mantissa bits for weight evaluation.
pub const EXT_PREC: u32 = 64;

/// Largest refinement depth for the `ln` variants: `e_5` overflows every
/// binary floating-point format.
pub const MAX_LN_DEPTH: u32 = 4;

/// Hard cap on the number of terms summed for `N = ∞`.
pub const L_SERIES_MAX_TERMS: usize = 100_000_000;

/// Default relative stopping threshold for the `N = ∞` series.
pub const L_SERIES_TOL: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("ln_{j} is undefined at {x} (requires x > e_{})", j - 1)]
    IterLn { j: u32, x: f64 },
    #[error("L_{j} is undefined at {s}")]
    NormL { j: u32, s: f64 },
    #[error("e_{0} overflows double precision")]
    IterExpOverflow(u32),
    #[error("L-series argument {0} outside (0, 1)")]
    SeriesArgument(f64),
    #[error("L-series at s = {s} did not converge within {terms} terms")]
    SeriesNonConvergence { s: f64, terms: usize },
}

/// A violated hypothesis of the inequality family.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HypothesisError {
    #[error("orders must satisfy 1 ≤ ℓ ≤ m (got ℓ = {ell}, m = {m})")]
    OrderRange { ell: u32, m: u32 },
    #[error("interior-ln requires γ ≥ e_N·ρ (N = {n}, γ = {anchor}, ρ = {rho})")]
    InteriorLn { n: u32, anchor: String, rho: String },
    #[error("exterior-ln requires ρ ≥ e_N·γ (N = {n}, γ = {anchor}, ρ = {rho})")]
    ExteriorLn { n: u32, anchor: String, rho: String },
    #[error("interior-L requires τ ≥ ρ (τ = {anchor}, ρ = {rho})")]
    InteriorL { anchor: String, rho: String },
    #[error("exterior-L requires ρ ≥ τ (τ = {anchor}, ρ = {rho})")]
    ExteriorL { anchor: String, rho: String },
    #[error("ln variants require N ≤ {MAX_LN_DEPTH}: e_{n} is not representable")]
    DepthCap { n: u32 },
    #[error("N = ∞ is only available for the L variants")]
    InfiniteDepthLn,
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: String },
    #[error("vector dimension d must be at least 1")]
    Dimension,
}

/// `e_j` with `e₀ = 0`, `e_{j+1} = exp(e_j)`.
pub fn iter_exp(j: u32) -> Result<f64, DomainError> {
    if j > MAX_LN_DEPTH {
        return Err(DomainError::IterExpOverflow(j));
    }
    let mut e = Float::with_val(EXT_PREC, 0);
    for _ in 0..j {
        e.exp_mut();
    }
    Ok(e.to_f64())
}

/// Outward-rounded enclosure `[lo, hi]` of `e_j` at `prec` bits.
pub fn iter_exp_enclosure(j: u32, prec: u32) -> Result<(Float, Float), DomainError> {
    if j > MAX_LN_DEPTH {
        return Err(DomainError::IterExpOverflow(j));
    }
    let mut lo = Float::with_val(prec, 0);
    let mut hi = Float::with_val(prec, 0);
    for _ in 0..j {
        lo.exp_round(Round::Down);
        hi.exp_round(Round::Up);
    }
    Ok((lo, hi))
}

/// Decides `lhs ≥ e_n · rhs` for exact positive rationals.
pub fn dominates_iter_exp(lhs: &Rational, rhs: &Rational, n: u32) -> Result<bool, DomainError> {
    let ratio = Rational::from(lhs / rhs);
    let (lo, hi) = iter_exp_enclosure(n, 256)?;
    Ok(match ratio.partial_cmp(&hi) {
        Some(Ordering::Greater) | Some(Ordering::Equal) => true,
        // Between the bounds cannot be decided; `e_n` is transcendental for n ≥ 2,
        // so treat it as a violation.
        _ => {
            let _ = lo;
            false
        }
    })
}

/// `[ln_1(x), …, ln_n(x)]` computed in extended precision.
fn iter_lns_ext(n: u32, x: Float) -> Result<Vec<Float>, DomainError> {
    let x0 = x.to_f64();
    let mut out = Vec::with_capacity(n as usize);
    let mut cur = x;
    for j in 1..=n {
        if cur.cmp0() != Some(Ordering::Greater) {
            return Err(DomainError::IterLn { j, x: x0 });
        }
        cur.ln_mut();
        out.push(cur.clone());
    }
    Ok(out)
}

/// `ln_j(x)`, defined for `x > e_{j−1}`.
pub fn iter_ln(j: u32, x: f64) -> Result<f64, DomainError> {
    assert!(j >= 1, "iterated logarithm index starts at 1");
    let v = iter_lns_ext(j, Float::with_val(EXT_PREC, x))?;
    Ok(v[j as usize - 1].to_f64())
}

/// `[L_1(s), …, L_n(s)]` in extended precision.
fn norm_ls_ext(n: u32, s: Float) -> Result<Vec<Float>, DomainError> {
    let s0 = s.to_f64();
    let mut out = Vec::with_capacity(n as usize);
    let mut cur = s;
    for j in 1..=n {
        if cur.cmp0() != Some(Ordering::Greater) {
            return Err(DomainError::NormL { j, s: s0 });
        }
        cur.ln_mut();
        // Each iterate must stay in (0, e). An f64 cannot hold e exactly, so
        // its nearest neighbours are treated as the pole at ln s = 1.
        let denom = Float::with_val(EXT_PREC, 1 - &cur);
        if denom <= 4.0 * f64::EPSILON {
            return Err(DomainError::NormL { j, s: s0 });
        }
        cur = denom.recip();
        out.push(cur.clone());
    }
    Ok(out)
}

/// `L_1(s) = (1 − ln s)^{−1}`, `L_{j+1} = L_1 ∘ L_j`.
pub fn norm_l(j: u32, s: f64) -> Result<f64, DomainError> {
    assert!(j >= 1, "normalized logarithm index starts at 1");
    let v = norm_ls_ext(j, Float::with_val(EXT_PREC, s))?;
    Ok(v[j as usize - 1].to_f64())
}

/// Relative residual of the log-shift identity
/// `Σ_{k=1}^{N} ∏_{j≤k} ln_j(x)^{−2} = t^{−2}(1 + Σ_{k=1}^{N−1} ∏_{j≤k} ln_j(t)^{−2})`,
/// `t = ln x`.
pub fn log_identity_check(n: u32, x: f64) -> Result<f64, DomainError> {
    assert!(n >= 1);
    let xf = Float::with_val(EXT_PREC, x);
    // x > e_N, i.e. every iterate up to ln_N(x) is positive.
    for (j, l) in iter_lns_ext(n, xf.clone())?.iter().enumerate() {
        if l.cmp0() != Some(Ordering::Greater) {
            return Err(DomainError::IterLn { j: j as u32 + 2, x });
        }
    }
    // Left side: each ln_j(x) evaluated from x afresh.
    let mut lhs = Float::with_val(EXT_PREC, 0);
    let mut prod = Float::with_val(EXT_PREC, 1);
    for j in 1..=n {
        let l = iter_lns_ext(j, xf.clone())?.pop().expect("j >= 1");
        prod *= Float::with_val(EXT_PREC, l.square_ref()).recip();
        lhs += &prod;
    }
    // Right side in the shifted variable t.
    let t = iter_lns_ext(1, xf)?.pop().expect("n >= 1");
    let t_inv2 = Float::with_val(EXT_PREC, t.square_ref()).recip();
    let mut inner = Float::with_val(EXT_PREC, 1);
    let mut prod = Float::with_val(EXT_PREC, 1);
    for j in 1..n {
        let l = iter_lns_ext(j, t.clone())?.pop().expect("j >= 1");
        prod *= Float::with_val(EXT_PREC, l.square_ref()).recip();
        inner += &prod;
    }
    let rhs = t_inv2 * inner;
    let diff = Float::with_val(EXT_PREC, &lhs - &rhs).abs();
    Ok((diff / lhs.abs()).to_f64())
}

/// Partial sum of `Σ_k ∏_{j≤k} L_j(s)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LSeries {
    pub sum: f64,
    /// Number of terms summed.
    pub terms: usize,
    pub last_term: f64,
    /// `last_term · terms / 3`: the tail of a sequence decaying like `k^{−4}`,
    /// which is the observed asymptotic rate of the products.
    pub tail_estimate: f64,
}

/// Sums `Σ_{k≥1} ∏_{j=1}^{k} L_j(s)²` until a term drops below `tol` times
/// the running sum.
///
/// Runs in `f64` through the equivalent recursion `a₁ = −ln s`,
/// `a_{j+1} = ln(1 + a_j)`, `L_j = 1/(1 + a_j)`, which keeps full relative
/// precision as `L_j → 1`.
pub fn l_series_tail(s: f64, tol: f64) -> Result<LSeries, DomainError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(DomainError::SeriesArgument(s));
    }
    let mut a = -s.ln();
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..=L_SERIES_MAX_TERMS {
        let one_plus = 1.0 + a;
        term /= one_plus * one_plus;
        sum += term;
        if term < tol * sum {
            return Ok(LSeries { sum, terms: k, last_term: term, tail_estimate: term * k as f64 / 3.0 });
        }
        a = a.ln_1p();
    }
    Err(DomainError::SeriesNonConvergence { s, terms: L_SERIES_MAX_TERMS })
}

fn l_series_cache() -> &'static Mutex<HashMap<u64, LSeries>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, LSeries>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// [`l_series_tail`] at the default tolerance, memoized by the bit pattern of
/// `s`. Quadrature revisits the same abscissae across many reports.
pub fn l_series_cached(s: f64) -> Result<LSeries, DomainError> {
    let key = s.to_bits();
    if let Some(hit) = l_series_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(*hit);
    }
    let v = l_series_tail(s, L_SERIES_TOL)?;
    l_series_cache().lock().expect("cache poisoned").insert(key, v);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    InteriorLn,
    InteriorL,
    ExteriorLn,
    ExteriorL,
}

impl Variant {
    pub fn is_interior(self) -> bool {
        matches!(self, Variant::InteriorLn | Variant::InteriorL)
    }

    pub fn is_ln(self) -> bool {
        matches!(self, Variant::InteriorLn | Variant::ExteriorLn)
    }

    pub fn from_parts(interior: bool, ln: bool) -> Self {
        match (interior, ln) {
            (true, true) => Variant::InteriorLn,
            (true, false) => Variant::InteriorL,
            (false, true) => Variant::ExteriorLn,
            (false, false) => Variant::ExteriorL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::InteriorLn => "interior-ln",
            Variant::InteriorL => "interior-L",
            Variant::ExteriorLn => "exterior-ln",
            Variant::ExteriorL => "exterior-L",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Refinement depth `N`; `N = 0` drops every logarithmic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    Finite(u32),
    Infinite,
}

impl Depth {
    pub fn is_zero(self) -> bool {
        self == Depth::Finite(0)
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(n) => write!(f, "{n}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Depth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Depth::Infinite),
            t => t.parse().map(Depth::Finite).map_err(|_| format!("invalid depth {s:?}")),
        }
    }
}

impl Serialize for Depth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Depth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A validated right-hand-side weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    variant: Variant,
    m: u32,
    ell: u32,
    depth: Depth,
    alpha: Alpha,
    rho: Rational,
    anchor: Rational,
}

impl WeightSpec {
    pub fn new(
        variant: Variant,
        m: u32,
        ell: u32,
        depth: Depth,
        alpha: Alpha,
        rho: Rational,
        anchor: Rational,
    ) -> Result<Self, HypothesisError> {
        if ell < 1 || ell > m {
            return Err(HypothesisError::OrderRange { ell, m });
        }
        if rho.cmp0() != Ordering::Greater {
            return Err(HypothesisError::NonPositive { name: "ρ", value: rho.to_string() });
        }
        let spec = WeightSpec { variant, m, ell, depth, alpha, rho, anchor };
        spec.check_hypotheses()?;
        Ok(spec)
    }

    fn check_hypotheses(&self) -> Result<(), HypothesisError> {
        let n = match self.depth {
            Depth::Finite(0) => return Ok(()),
            Depth::Finite(n) => Some(n),
            Depth::Infinite => None,
        };
        if self.anchor.cmp0() != Ordering::Greater {
            let name = if self.variant.is_ln() { "γ" } else { "τ" };
            return Err(HypothesisError::NonPositive { name, value: self.anchor.to_string() });
        }
        let (anchor, rho) = (self.anchor.to_string(), self.rho.to_string());
        match self.variant {
            Variant::InteriorLn | Variant::ExteriorLn => {
                let n = n.ok_or(HypothesisError::InfiniteDepthLn)?;
                if n > MAX_LN_DEPTH {
                    return Err(HypothesisError::DepthCap { n });
                }
                if self.variant == Variant::InteriorLn {
                    if !dominates_iter_exp(&self.anchor, &self.rho, n).unwrap_or(false) {
                        return Err(HypothesisError::InteriorLn { n, anchor, rho });
                    }
                } else if !dominates_iter_exp(&self.rho, &self.anchor, n).unwrap_or(false) {
                    return Err(HypothesisError::ExteriorLn { n, anchor, rho });
                }
            }
            Variant::InteriorL => {
                if self.anchor < self.rho {
                    return Err(HypothesisError::InteriorL { anchor, rho });
                }
            }
            Variant::ExteriorL => {
                if self.rho < self.anchor {
                    return Err(HypothesisError::ExteriorL { anchor, rho });
                }
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn ell(&self) -> u32 {
        self.ell
    }
    pub fn depth(&self) -> Depth {
        self.depth
    }
    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }
    pub fn rho(&self) -> &Rational {
        &self.rho
    }
    pub fn anchor(&self) -> &Rational {
        &self.anchor
    }
}

/// The additive pieces of the weight at one point; the full density is
/// `x^{α−2ℓ}` times [`WeightTerms::total`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTerms {
    pub a_term: f64,
    pub b_sum: f64,
    /// `|c_{2j}| A(j,0)·(…)^{2j}` for `j = 2..ℓ`.
    pub c_a_terms: Vec<f64>,
    /// `|c_{2j}| B(j,0)·(…)^{2j}·Σ_{k<N} ∏ (…)` for `j = 2..ℓ`.
    pub c_b_terms: Vec<f64>,
}

impl WeightTerms {
    pub fn total(&self) -> f64 {
        self.a_term + self.b_sum + self.c_a_terms.iter().sum::<f64>() + self.c_b_terms.iter().sum::<f64>()
    }

    /// Number of scalar terms, which is fixed by `ℓ`.
    pub fn len(&self) -> usize {
        2 + self.c_a_terms.len() + self.c_b_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flattened in the order A, B, c·A (j = 2..ℓ), c·B (j = 2..ℓ).
    pub fn flatten_into(&self, out: &mut [f64]) {
        out[0] = self.a_term;
        out[1] = self.b_sum;
        let k = self.c_a_terms.len();
        out[2..2 + k].copy_from_slice(&self.c_a_terms);
        out[2 + k..2 + 2 * k].copy_from_slice(&self.c_b_terms);
    }
}

/// Precomputed constants for repeated evaluation of one weight.
#[derive(Debug, Clone)]
pub struct WeightEvaluator {
    variant: Variant,
    ell: u32,
    depth: Depth,
    anchor: f64,
    a: f64,
    b: f64,
    /// `(|c_{2j}| A(j,0), |c_{2j}| B(j,0))` for `j = 2..ℓ`.
    c_pairs: Vec<(f64, f64)>,
}

impl WeightEvaluator {
    pub fn new(spec: &WeightSpec, coeffs: &CoefficientTable) -> Self {
        assert_eq!(coeffs.m, spec.ell, "coefficient table must be for order ℓ");
        let zero = Alpha::zero();
        let c_pairs = (2..=spec.ell)
            .map(|j| {
                let c = coeffs.abs_even(j);
                (c * constant_a_f64(j, &zero), c * constant_b_f64(j, &zero))
            })
            .collect();
        WeightEvaluator {
            variant: spec.variant,
            ell: spec.ell,
            depth: spec.depth,
            anchor: spec.anchor.to_f64(),
            a: constant_a_f64(spec.ell, &spec.alpha),
            b: constant_b_f64(spec.ell, &spec.alpha),
            c_pairs,
        }
    }

    pub fn term_count(&self) -> usize {
        2 * self.ell as usize
    }

    /// Argument of the logarithms for this variant, in extended precision.
    fn argument(&self, x: f64) -> Float {
        let x = Float::with_val(EXT_PREC, x);
        let anchor = Float::with_val(EXT_PREC, self.anchor);
        match self.variant {
            Variant::InteriorLn | Variant::ExteriorL => anchor / x,
            Variant::ExteriorLn | Variant::InteriorL => x / anchor,
        }
    }

    pub fn eval(&self, x: f64) -> Result<WeightTerms, DomainError> {
        let k = self.c_pairs.len();
        let mut terms = WeightTerms {
            a_term: self.a,
            b_sum: 0.0,
            c_a_terms: vec![0.0; k],
            c_b_terms: vec![0.0; k],
        };
        let n = match self.depth {
            Depth::Finite(0) => return Ok(terms),
            Depth::Finite(n) => Some(n),
            Depth::Infinite => None,
        };
        // factors[p-1] is ln_p(arg)^{-2} or L_p(arg)^2.
        let (factors, tail_after_first): (Vec<f64>, Option<f64>) = match (self.variant.is_ln(), n) {
            (true, Some(n)) => {
                let lns = iter_lns_ext(n, self.argument(x))?;
                let f = lns
                    .iter()
                    .map(|l| Float::with_val(EXT_PREC, l.square_ref()).recip().to_f64())
                    .collect();
                (f, None)
            }
            (false, Some(n)) => {
                let ls = norm_ls_ext(n, self.argument(x))?;
                let f = ls.iter().map(|l| Float::with_val(EXT_PREC, l.square_ref()).to_f64()).collect();
                (f, None)
            }
            (false, None) => {
                let l1 = norm_ls_ext(1, self.argument(x))?.pop().expect("one level");
                let l1 = l1.to_f64();
                let shifted = l_series_cached(l1)?;
                (vec![l1 * l1], Some(shifted.sum))
            }
            (true, None) => unreachable!("validated: ln variants have finite depth"),
        };
        let first = factors[0];
        let (b_series, shifted_series) = match tail_after_first {
            // S(s) = L_1(s)² (1 + S(L_1(s)))
            Some(shifted) => (first * (1.0 + shifted), shifted),
            None => {
                let mut prod = 1.0;
                let mut full = 0.0;
                for f in &factors {
                    prod *= f;
                    full += prod;
                }
                let mut prod = 1.0;
                let mut shifted = 0.0;
                for f in &factors[1..] {
                    prod *= f;
                    shifted += prod;
                }
                (full, shifted)
            }
        };
        terms.b_sum = self.b * b_series;
        for (idx, (ca, cb)) in self.c_pairs.iter().enumerate() {
            let j = idx as i32 + 2;
            let pow = first.powi(j);
            terms.c_a_terms[idx] = ca * pow;
            terms.c_b_terms[idx] = cb * pow * shifted_series;
        }
        Ok(terms)
    }
}

/// Evaluates every additive weight term at `x`.
pub fn weight_value(spec: &WeightSpec, coeffs: &CoefficientTable, x: f64) -> Result<WeightTerms, DomainError> {
    WeightEvaluator::new(spec, coeffs).eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::expand_characteristic;
    use std::f64::consts::E;

    fn rat(v: f64) -> Rational {
        Rational::from_f64(v).unwrap()
    }

    #[test]
    fn iter_ln_examples() {
        assert_eq!(iter_ln(1, E).unwrap(), 1.0);
        assert!((iter_ln(2, E.exp()).unwrap() - 1.0).abs() < 1e-15);
        let direct = 20f64.ln().ln();
        assert!((iter_ln(2, 20.0).unwrap() - direct).abs() <= f64::EPSILON * direct);
        assert!(matches!(iter_ln(2, 1.0), Err(DomainError::IterLn { j: 2, .. })));
        assert!(iter_ln(1, 0.0).is_err());
        assert!(iter_ln(3, 2.0).is_err());
    }

    #[test]
    fn iter_exp_values() {
        assert_eq!(iter_exp(0).unwrap(), 0.0);
        assert_eq!(iter_exp(1).unwrap(), 1.0);
        assert_eq!(iter_exp(2).unwrap(), E);
        assert!((iter_exp(3).unwrap() - 15.154262241479262).abs() < 1e-13);
        assert_eq!(iter_exp(5), Err(DomainError::IterExpOverflow(5)));
    }

    #[test]
    fn iter_ln_vanishes_at_tower() {
        for j in 1..=4 {
            let v = iter_ln(j, iter_exp(j).unwrap()).unwrap();
            assert!(v.abs() < 1e-12, "j={j}: {v}");
        }
    }

    #[test]
    fn enclosure_is_ordered() {
        for j in 0..=4 {
            let (lo, hi) = iter_exp_enclosure(j, 128).unwrap();
            assert!(lo <= hi);
        }
    }

    #[test]
    fn norm_l_examples() {
        assert_eq!(norm_l(1, 1.0).unwrap(), 1.0);
        assert_eq!(norm_l(2, 1.0).unwrap(), 1.0);
        let t = 4.0f64;
        let v = norm_l(1, (1.0 - t).exp()).unwrap();
        assert!((v - 1.0 / t).abs() < 1e-15);
        assert!(norm_l(1, E).is_err());
        assert!(norm_l(1, 0.0).is_err());
        // L_1(s) < 0 for s > e, so L_2 is undefined there.
        assert!(norm_l(2, 10.0).is_err());
    }

    #[test]
    fn log_identity_examples() {
        assert!(log_identity_check(1, E * E).unwrap() < 1e-18);
        let e3 = iter_exp(3).unwrap();
        assert!(log_identity_check(2, e3 * e3).unwrap() <= 1e-12);
        assert!(log_identity_check(3, 10.0 * e3).unwrap() <= 1e-12);
        assert!(log_identity_check(2, 2.0).is_err());
    }

    #[test]
    fn l_series_examples() {
        let t: f64 = 10.0;
        let s = (1.0 - t).exp();
        let first = {
            let l1 = norm_l(1, s).unwrap();
            l1 * l1
        };
        assert!((first - 0.01).abs() < 1e-15);
        let r = l_series_tail(0.1, 1e-16).unwrap();
        assert!(r.sum.is_finite() && r.sum > 0.0);
        assert!(r.terms < L_SERIES_MAX_TERMS);
        assert!(matches!(
            l_series_tail(1.0 - 1e-9, 1e-16),
            Err(DomainError::SeriesNonConvergence { .. })
        ));
        assert!(matches!(l_series_tail(1.0, 1e-16), Err(DomainError::SeriesArgument(_))));
    }

    #[test]
    fn interior_ln_weight_example() {
        let spec = WeightSpec::new(
            Variant::InteriorLn,
            1,
            1,
            Depth::Finite(1),
            Alpha::zero(),
            rat(1.0),
            rat(E),
        )
        .unwrap();
        let coeffs = expand_characteristic(1, &Alpha::zero()).unwrap();
        let w = weight_value(&spec, &coeffs, 1.0 / E).unwrap();
        assert_eq!(w.a_term, 0.25);
        assert!((w.b_sum - 1.0 / 16.0).abs() < 1e-16);
        assert!(w.c_a_terms.is_empty() && w.c_b_terms.is_empty());
    }

    #[test]
    fn exterior_l_weight_matches_substitution() {
        // x = ρ e^{t-1} with τ = ρ gives L_1(τ/x) = 1/t.
        let rho = 3.0;
        let spec = WeightSpec::new(
            Variant::ExteriorL,
            1,
            1,
            Depth::Finite(1),
            Alpha::zero(),
            rat(rho),
            rat(rho),
        )
        .unwrap();
        let coeffs = expand_characteristic(1, &Alpha::zero()).unwrap();
        for t in [1.5, 2.0, 7.0] {
            let w = weight_value(&spec, &coeffs, rho * (t - 1.0f64).exp()).unwrap();
            assert!((w.b_sum - 0.25 / (t * t)).abs() < 1e-15);
        }
    }

    #[test]
    fn hypothesis_errors_name_the_rule() {
        let mk = |v, n, rho: f64, anchor: f64| {
            WeightSpec::new(v, 2, 2, Depth::Finite(n), Alpha::zero(), rat(rho), rat(anchor))
        };
        let e = mk(Variant::InteriorLn, 2, 1.0, 2.7).unwrap_err();
        assert!(e.to_string().contains("interior-ln requires γ ≥ e_N·ρ"));
        assert!(mk(Variant::InteriorLn, 2, 1.0, 2.72).is_ok());
        assert!(mk(Variant::InteriorLn, 1, 1.0, 1.0).is_ok());
        assert!(matches!(mk(Variant::ExteriorLn, 3, 15.0, 1.0), Err(HypothesisError::ExteriorLn { .. })));
        assert!(mk(Variant::ExteriorLn, 3, 15.2, 1.0).is_ok());
        assert!(matches!(mk(Variant::InteriorL, 2, 2.0, 1.0), Err(HypothesisError::InteriorL { .. })));
        assert!(matches!(mk(Variant::ExteriorL, 2, 1.0, 2.0), Err(HypothesisError::ExteriorL { .. })));
        assert!(matches!(mk(Variant::InteriorLn, 5, 1.0, 1e300), Err(HypothesisError::DepthCap { n: 5 })));
        let inf = WeightSpec::new(
            Variant::InteriorLn,
            1,
            1,
            Depth::Infinite,
            Alpha::zero(),
            rat(1.0),
            rat(100.0),
        );
        assert_eq!(inf.unwrap_err(), HypothesisError::InfiniteDepthLn);
        let order = WeightSpec::new(Variant::InteriorL, 1, 2, Depth::Finite(1), Alpha::zero(), rat(1.0), rat(1.0));
        assert!(matches!(order, Err(HypothesisError::OrderRange { .. })));
    }

    #[test]
    fn depth_parsing() {
        assert_eq!("inf".parse::<Depth>().unwrap(), Depth::Infinite);
        assert_eq!("3".parse::<Depth>().unwrap(), Depth::Finite(3));
        assert!("x".parse::<Depth>().is_err());
    }
}
