//! Both sides of the weighted inequalities and the structural identities,
//! evaluated by quadrature with an explicit error budget.

use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::exact::{constant_a_f64, constant_b_f64, expand_characteristic, Alpha, ExactError};
use crate::jet::Jet;
use crate::quadrature::{integrate_vec, QuadError, QuadOptions, QuadResult};
use crate::testfunctions::{Descriptor, JetFunction, VectorFunction};
use crate::weights::{iter_ln, Depth, DomainError, HypothesisError, Variant, WeightEvaluator, WeightSpec};

/// Error estimates are inflated by this factor before deciding a status.
pub const BUDGET_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogKind {
    #[serde(rename = "ln")]
    Ln,
    #[serde(rename = "L")]
    L,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Interior => "interior",
            Side::Exterior => "exterior",
        })
    }
}

impl fmt::Display for LogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogKind::Ln => "ln",
            LogKind::L => "L",
        })
    }
}

/// One inequality instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub m: u32,
    pub ell: u32,
    pub depth: Depth,
    pub alpha: Alpha,
    pub rho: Rational,
    /// `γ` for the `ln` variants, `τ` for the `L` variants.
    pub anchor: Rational,
    pub side: Side,
    pub kind: LogKind,
    pub d: u32,
}

impl ProblemParams {
    pub fn variant(&self) -> Variant {
        Variant::from_parts(self.side == Side::Interior, self.kind == LogKind::Ln)
    }

    pub fn weight_spec(&self) -> Result<WeightSpec, HypothesisError> {
        if self.d == 0 {
            return Err(HypothesisError::Dimension);
        }
        WeightSpec::new(
            self.variant(),
            self.m,
            self.ell,
            self.depth,
            self.alpha.clone(),
            self.rho.clone(),
            self.anchor.clone(),
        )
    }

    pub fn validate(&self) -> Result<(), HypothesisError> {
        self.weight_spec().map(|_| ())
    }

    /// Interval of integration, `(0, ρ)` or `(ρ, ∞)`.
    pub fn interval(&self) -> (f64, f64) {
        let rho = self.rho.to_f64();
        match self.side {
            Side::Interior => (0.0, rho),
            Side::Exterior => (rho, f64::INFINITY),
        }
    }

    pub fn echo(&self) -> ParamsEcho {
        ParamsEcho {
            variant: self.variant().label().to_string(),
            m: self.m,
            ell: self.ell,
            depth: self.depth,
            alpha: self.alpha.to_string(),
            rho: self.rho.to_string(),
            anchor: self.anchor.to_string(),
            d: self.d,
        }
    }
}

/// Parameters as recorded in a report, with exact values as strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub variant: String,
    pub m: u32,
    pub ell: u32,
    pub depth: Depth,
    pub alpha: String,
    pub rho: String,
    pub anchor: String,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    /// Both sides vanish identically (`f ≡ 0`).
    Equality,
    /// The instance lies outside what can be checked with explicit constants.
    Unsupported,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Equality => "EQUALITY",
            Status::Unsupported => "UNSUPPORTED",
        })
    }
}

/// Status of a signed slack against its error budget.
pub fn classify(slack: f64, budget: f64) -> Status {
    if slack > budget {
        Status::Pass
    } else if slack < -budget {
        Status::Fail
    } else {
        Status::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermIntegral {
    pub label: String,
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub lhs: f64,
    pub rhs_total: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSummary {
    pub panels: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Inequality,
    Poincare,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub params: ParamsEcho,
    pub functions: Vec<Descriptor>,
    pub lhs: TermIntegral,
    pub rhs_terms: Vec<TermIntegral>,
    pub rhs_total: f64,
    pub slack: f64,
    pub error_budget: f64,
    pub status: Status,
    pub quadrature: QuadSummary,
    /// Per-component breakdown on the shared panels; empty for `d = 1`.
    pub components: Vec<ComponentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("test function support ({a}, {b}) is not strictly inside the interval ({lo}, {hi})")]
    Support { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("test function jets are only available to order {have}, need {need}")]
    JetOrder { have: usize, need: usize },
    #[error("f^({k}) does not vanish at the support endpoint {x}")]
    BoundaryNonVanishing { k: usize, x: f64 },
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: u32, got: usize },
    #[error("integrand not finite at x = {0}")]
    NonFinite(f64),
    #[error("{0}")]
    Precondition(String),
}

fn quad_failure(e: QuadError<DomainError>) -> Result<(QuadResult, bool), VerifyError> {
    match e {
        QuadError::PanelLimit(partial) => Ok((partial, false)),
        QuadError::Integrand(d) => Err(VerifyError::Domain(d)),
        QuadError::NonFinite { x } => Err(VerifyError::NonFinite(x)),
        QuadError::Interval { a, b } => Err(VerifyError::Support { a, b, lo: a, hi: b }),
    }
}

fn run_quadrature<F>(
    f: F,
    dim: usize,
    support: (f64, f64),
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<(QuadResult, bool), VerifyError>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), DomainError>,
{
    match integrate_vec(f, dim, support.0, support.1, breakpoints, opts) {
        Ok(r) => Ok((r, true)),
        Err(e) => quad_failure(e),
    }
}

fn check_support(support: (f64, f64), interval: (f64, f64)) -> Result<(), VerifyError> {
    let (a, b) = support;
    let (lo, hi) = interval;
    if a.is_finite() && b.is_finite() && a > lo && b < hi {
        Ok(())
    } else {
        Err(VerifyError::Support { a, b, lo, hi })
    }
}

/// `f(a) = f′(a) = … = f^{(m−1)}(a) = 0` at both support endpoints.
fn check_boundary(f: &JetFunction, m: u32) -> Result<(), VerifyError> {
    if m == 0 {
        return Ok(());
    }
    let order = m as usize - 1;
    for x in [f.support().0, f.support().1] {
        let j = f.eval_jet(x, order);
        if let Some(k) = (0..=order).find(|&k| j.coeff(k) != 0.0) {
            return Err(VerifyError::BoundaryNonVanishing { k, x });
        }
    }
    Ok(())
}

fn check_function(f: &VectorFunction, interval: (f64, f64), need: usize, m: u32) -> Result<(), VerifyError> {
    check_support(f.support(), interval)?;
    if f.max_order() < need {
        return Err(VerifyError::JetOrder { have: f.max_order(), need });
    }
    for c in f.components() {
        check_boundary(c, m)?;
    }
    Ok(())
}

fn term_labels(ell: u32) -> Vec<String> {
    let mut labels = vec!["A".to_string(), "B".to_string()];
    labels.extend((2..=ell).map(|j| format!("c{}A", 2 * j)));
    labels.extend((2..=ell).map(|j| format!("c{}B", 2 * j)));
    labels
}

/// Checks the inequality of the selected variant for a scalar function.
pub fn verify_inequality(
    params: &ProblemParams,
    f: &JetFunction,
    opts: &QuadOptions,
) -> Result<VerificationReport, VerifyError> {
    verify_vector(params, &VectorFunction::from(f.clone()), opts)
}

/// Checks the inequality for `f = (f_1, …, f_d)` with `‖f‖² = Σ f_i²`.
pub fn verify_vector(
    params: &ProblemParams,
    f: &VectorFunction,
    opts: &QuadOptions,
) -> Result<VerificationReport, VerifyError> {
    let spec = params.weight_spec()?;
    if f.dim() != params.d as usize {
        return Err(VerifyError::Dimension { expected: params.d, got: f.dim() });
    }
    let m = params.m as usize;
    let ell = params.ell as usize;
    check_function(f, params.interval(), m, params.m)?;

    let coeffs = expand_characteristic(params.ell, &params.alpha)?;
    let weight = WeightEvaluator::new(&spec, &coeffs);
    let nterms = weight.term_count();
    let block = 1 + nterms;
    let d = f.dim();
    let alpha = params.alpha.to_f64();
    let mut wbuf = vec![0.0; nterms];
    let mut jets: Vec<Jet> = Vec::with_capacity(d);

    let integrand = |x: f64, out: &mut [f64]| -> Result<(), DomainError> {
        jets.clear();
        jets.extend(f.components().iter().map(|c| c.eval_jet(x, m)));
        if jets.iter().all(Jet::is_zero) {
            return Ok(());
        }
        weight.eval(x)?.flatten_into(&mut wbuf);
        let lhs_w = x.powf(alpha);
        let rhs_w = x.powf(alpha - 2.0 * ell as f64);
        for (i, j) in jets.iter().enumerate() {
            let top = j.derivative(m);
            let low = j.derivative(m - ell);
            let o = &mut out[i * block..(i + 1) * block];
            o[0] = lhs_w * top * top;
            let base = rhs_w * low * low;
            for (t, w) in wbuf.iter().enumerate() {
                o[1 + t] = base * w;
            }
        }
        Ok(())
    };
    let (quad, converged) = run_quadrature(integrand, d * block, f.support(), &f.breakpoints(), opts)?;

    let labels = term_labels(params.ell);
    let total = |k: usize| -> (f64, f64) {
        (0..d).fold((0.0, 0.0), |(v, e), i| (v + quad.values[i * block + k], e + quad.abs_errors[i * block + k]))
    };
    let (lhs_v, lhs_e) = total(0);
    let rhs_terms: Vec<TermIntegral> = labels
        .iter()
        .enumerate()
        .map(|(t, label)| {
            let (value, abs_error) = total(1 + t);
            TermIntegral { label: label.clone(), value, abs_error }
        })
        .collect();
    let components = if d > 1 {
        (0..d)
            .map(|i| {
                let o = &quad.values[i * block..(i + 1) * block];
                let rhs_total: f64 = o[1..].iter().sum();
                ComponentSummary { lhs: o[0], rhs_total, slack: o[0] - rhs_total }
            })
            .collect()
    } else {
        Vec::new()
    };
    let lhs = TermIntegral { label: "lhs".into(), value: lhs_v, abs_error: lhs_e };
    Ok(assemble(
        ReportKind::Inequality,
        params.echo(),
        f,
        lhs,
        rhs_terms,
        &quad,
        converged,
        components,
    ))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    kind: ReportKind,
    params: ParamsEcho,
    f: &VectorFunction,
    lhs: TermIntegral,
    rhs_terms: Vec<TermIntegral>,
    quad: &QuadResult,
    converged: bool,
    components: Vec<ComponentSummary>,
) -> VerificationReport {
    let rhs_total: f64 = rhs_terms.iter().map(|t| t.value).sum();
    let slack = lhs.value - rhs_total;
    let error_budget = BUDGET_FACTOR * (lhs.abs_error + rhs_terms.iter().map(|t| t.abs_error).sum::<f64>());
    let all_zero = lhs.value == 0.0 && rhs_terms.iter().all(|t| t.value == 0.0);
    let (status, note) = if !converged {
        (Status::Inconclusive, Some("quadrature did not reach its tolerance".to_string()))
    } else if all_zero && f.components().iter().all(JetFunction::is_identically_zero) {
        (Status::Equality, None)
    } else {
        (classify(slack, error_budget), None)
    };
    VerificationReport {
        kind,
        params,
        functions: f.components().iter().map(|c| c.descriptor().clone()).collect(),
        lhs,
        rhs_terms,
        rhs_total,
        slack,
        error_budget,
        status,
        quadrature: QuadSummary { panels: quad.panels, evaluations: quad.evaluations, converged },
        components,
        note,
    }
}

/// Outcome of an identity check: both sides and their relative difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub left: f64,
    pub right: f64,
    pub residual: f64,
    pub abs_error: f64,
}

fn relative(left: f64, right: f64) -> f64 {
    let scale = left.abs().max(right.abs());
    if scale == 0.0 {
        0.0
    } else {
        (left - right).abs() / scale
    }
}

/// `∫ x^α |f^{(m)}|² = (−1)^m ∫ (x^α f^{(m)})^{(m)} f` over the support of `f`.
pub fn check_ibp_identity(m: u32, alpha: &Alpha, f: &JetFunction, opts: &QuadOptions) -> Result<IdentityCheck, VerifyError> {
    let mu = m as usize;
    let vf = VectorFunction::from(f.clone());
    check_function(&vf, (0.0, f64::INFINITY), 2 * mu, m)?;
    let a = alpha.to_f64();
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let integrand = |x: f64, out: &mut [f64]| -> Result<(), DomainError> {
        let j = f.eval_jet(x, 2 * mu);
        if j.is_zero() {
            return Ok(());
        }
        let top = j.derivative(mu);
        out[0] = x.powf(a) * top * top;
        let inner = Jet::variable(mu, x).powf(a) * j.differentiate(mu).truncate(mu);
        out[1] = sign * inner.derivative(mu) * j.value();
        Ok(())
    };
    let (q, converged) = run_quadrature(integrand, 2, f.support(), f.breakpoints(), opts)?;
    if !converged {
        return Err(VerifyError::Precondition("quadrature did not converge".into()));
    }
    Ok(IdentityCheck {
        left: q.values[0],
        right: q.values[1],
        residual: relative(q.values[0], q.values[1]),
        abs_error: q.abs_errors[0] + q.abs_errors[1],
    })
}

/// Compares the slack of the exterior-ln inequality with `ℓ = m` against the
/// same quantity after the substitution `x = γe^t`,
/// `f(γe^t) = e^{[(2m−1−α)/2]t} w(t)`, where it becomes
/// `γ^{α−2m+1} Σ_{j=1}^{m} |c_{2j}| ∫ (|w^{(j)}|² − A(j,0) t^{−2j}|w|²
///  − B(j,0) t^{−2j} Σ_{k<N} ∏_{p≤k} ln_p(t)^{−2} |w|²) dt`.
pub fn check_transform_identity(
    params: &ProblemParams,
    f: &JetFunction,
    opts: &QuadOptions,
) -> Result<IdentityCheck, VerifyError> {
    if params.variant() != Variant::ExteriorLn || params.ell != params.m {
        return Err(VerifyError::Precondition("transform identity needs exterior-ln with ℓ = m".into()));
    }
    let n = match params.depth {
        Depth::Finite(n) => n,
        Depth::Infinite => return Err(VerifyError::Precondition("transform identity needs finite N".into())),
    };
    if !params.alpha.is_exact() || params.alpha.is_exceptional(params.m) != Some(false) {
        return Err(VerifyError::Precondition("transform identity needs exact, non-exceptional α".into()));
    }
    let x_side = verify_inequality(params, f, opts)?;
    if !x_side.quadrature.converged {
        return Err(VerifyError::Precondition("quadrature did not converge".into()));
    }

    let m = params.m;
    let mu = m as usize;
    let alpha = params.alpha.to_f64();
    let gamma = params.anchor.to_f64();
    let p = (2.0 * m as f64 - 1.0 - alpha) / 2.0;
    let coeffs = expand_characteristic(m, &params.alpha)?;
    let zero = Alpha::zero();
    let consts: Vec<(f64, f64, f64)> = (1..=m)
        .map(|j| (coeffs.abs_even(j), constant_a_f64(j, &zero), constant_b_f64(j, &zero)))
        .collect();

    let integrand = |t: f64, out: &mut [f64]| -> Result<(), DomainError> {
        let tj = Jet::variable(mu, t);
        let x = tj.exp() * gamma;
        let outer = f.eval_jet(x.value(), mu);
        if outer.is_zero() {
            return Ok(());
        }
        let w = Jet::compose(&outer, &x) * (tj * -p).exp();
        let w0 = w.value();
        // Σ_{k=1}^{N−1} ∏_{p≤k} ln_p(t)^{−2}
        let mut series = 0.0;
        let mut prod = 1.0;
        for q in 1..n {
            let l = iter_ln(q, t)?;
            prod /= l * l;
            series += prod;
        }
        let mut acc = 0.0;
        for (j, &(c, a, b)) in consts.iter().enumerate() {
            let j = j + 1;
            let dj = w.derivative(j);
            let tp = t.powi(-2 * j as i32);
            // Without refinements the x-side carries no logarithmic terms.
            acc += if n == 0 { c * dj * dj } else { c * (dj * dj - a * tp * w0 * w0 - b * tp * series * w0 * w0) };
        }
        out[0] = acc;
        Ok(())
    };
    let (a, b) = f.support();
    let t_support = ((a / gamma).ln(), (b / gamma).ln());
    let t_breaks: Vec<f64> = f.breakpoints().iter().map(|x| (x / gamma).ln()).collect();
    let (q, converged) = run_quadrature(integrand, 1, t_support, &t_breaks, opts)?;
    if !converged {
        return Err(VerifyError::Precondition("quadrature did not converge".into()));
    }
    let t_side = gamma.powf(alpha - 2.0 * m as f64 + 1.0) * q.value();
    Ok(IdentityCheck {
        left: x_side.slack,
        right: t_side,
        residual: relative(x_side.slack, t_side),
        abs_error: x_side.error_budget / BUDGET_FACTOR + q.abs_error(),
    })
}

/// `∫_0^ρ x^α |f^{(m)}|² ≥ A(m−k,α) ρ^{−2(m−k)} ∫_0^ρ x^α |f^{(k)}|²`.
pub fn check_poincare(
    k: u32,
    m: u32,
    alpha: &Alpha,
    rho: &Rational,
    f: &JetFunction,
    opts: &QuadOptions,
) -> Result<VerificationReport, VerifyError> {
    if k >= m {
        return Err(VerifyError::Precondition(format!("Poincaré needs 0 ≤ k ≤ m − 1 (got k = {k}, m = {m})")));
    }
    let rho_f = rho.to_f64();
    let echo = ParamsEcho {
        variant: "poincare".into(),
        m,
        ell: m - k,
        depth: Depth::Finite(0),
        alpha: alpha.to_string(),
        rho: rho.to_string(),
        anchor: rho.to_string(),
        d: 1,
    };
    let vf = VectorFunction::from(f.clone());
    check_function(&vf, (0.0, rho_f), m as usize, m)?;
    let a = alpha.to_f64();
    let constant = constant_a_f64(m - k, alpha) * rho_f.powi(-2 * (m - k) as i32);
    let label = format!("A({},α)ρ^-{}", m - k, 2 * (m - k));
    if constant == 0.0 {
        return Ok(VerificationReport {
            kind: ReportKind::Poincare,
            params: echo,
            functions: vec![f.descriptor().clone()],
            lhs: TermIntegral { label: "lhs".into(), value: 0.0, abs_error: 0.0 },
            rhs_terms: vec![TermIntegral { label, value: 0.0, abs_error: 0.0 }],
            rhs_total: 0.0,
            slack: 0.0,
            error_budget: 0.0,
            status: Status::Unsupported,
            quadrature: QuadSummary { panels: 0, evaluations: 0, converged: false },
            components: Vec::new(),
            note: Some("exceptional α: the Poincaré constant has no explicit form".into()),
        });
    }
    let (mu, ku) = (m as usize, k as usize);
    let integrand = |x: f64, out: &mut [f64]| -> Result<(), DomainError> {
        let j = f.eval_jet(x, mu);
        let w = x.powf(a);
        out[0] = w * j.derivative(mu).powi(2);
        out[1] = constant * w * j.derivative(ku).powi(2);
        Ok(())
    };
    let (q, converged) = run_quadrature(integrand, 2, f.support(), f.breakpoints(), opts)?;
    let lhs = TermIntegral { label: "lhs".into(), value: q.values[0], abs_error: q.abs_errors[0] };
    let rhs = vec![TermIntegral { label, value: q.values[1], abs_error: q.abs_errors[1] }];
    Ok(assemble(ReportKind::Poincare, echo, &vf, lhs, rhs, &q, converged, Vec::new()))
}
