//! Smooth test functions with exact derivative jets.
//!
//! Every function is described by a serializable [`Descriptor`] tree, so a
//! report can record and later rebuild the exact corpus it was run on.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::exact::{signed_root_a, Alpha};
use crate::jet::{Jet, MAX_ORDER};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TestFunctionError {
    #[error("empty support ({a}, {b})")]
    InvalidSupport { a: f64, b: f64 },
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("extremizer needs 1 ≤ ℓ ≤ m (got ℓ = {ell}, m = {m})")]
    OrderRange { ell: u32, m: u32 },
    #[error("extremizer needs 2ε < ρ − 2 in working coordinates (ε = {eps}, ρ = {rho})")]
    EpsilonTooLarge { eps: f64, rho: f64 },
    #[error("shifted extremizer undefined: Ã(m, α) = 0 for m = {m}, α = {alpha}")]
    Exceptional { m: u32, alpha: String },
    #[error("vector components must share one support interval")]
    MismatchedSupport,
    #[error("vector function needs at least one component")]
    NoComponents,
}

/// Which admissible cutoff realizes `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    /// Normalized integral of the bump on `(1, 2)`.
    #[default]
    BumpIntegral,
    /// `g(x−1) / (g(x−1) + g(2−x))` with `g(t) = e^{−1/t}`.
    ExpRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerFamily {
    pub ell: u32,
    pub m: u32,
    pub alpha: Alpha,
    pub rho: f64,
    pub eps: f64,
    #[serde(default)]
    pub cutoff: CutoffKind,
}

/// Construction recipe of a [`JetFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Descriptor {
    Zero { a: f64, b: f64 },
    /// `exp(−1/(1−u²))` with `u` the affine image of `(a, b)` on `(−1, 1)`.
    Bump { a: f64, b: f64 },
    /// `x^p` on `(0, ∞)`.
    Power { p: f64 },
    /// The cutoff `φ`: `0` on `(−∞, 1]`, `1` on `[2, ∞)`.
    Step { cutoff: CutoffKind },
    Product { factors: Vec<Descriptor> },
    Sum { terms: Vec<Descriptor> },
    /// `c · f(x)`.
    Multiple { c: f64, inner: Box<Descriptor> },
    /// `f(scale · x + shift)`.
    Affine { scale: f64, shift: f64, inner: Box<Descriptor> },
    Extremizer(ExtremizerFamily),
}

impl Descriptor {
    /// `x ↦ f(λx)`.
    pub fn scaled(self, lambda: f64) -> Descriptor {
        Descriptor::Affine { scale: lambda, shift: 0.0, inner: Box::new(self) }
    }

    pub fn times(self, c: f64) -> Descriptor {
        Descriptor::Multiple { c, inner: Box::new(self) }
    }
}

/// A function with Taylor jets up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct JetFunction {
    descriptor: Descriptor,
    /// Extremizers are expanded into primitives once.
    expanded: Descriptor,
    support: (f64, f64),
    breakpoints: Vec<f64>,
    max_order: usize,
}

fn bump_normalization() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        let opts = QuadOptions { rel_tol: 1e-14, abs_tol: 0.0, ..QuadOptions::default() };
        integrate(|x| Ok::<_, ()>(bump_jet(1.0, 2.0, x, 0).value()), 1.0, 2.0, &opts)
            .expect("bump integral converges")
            .value()
    })
}

/// Jet of the standard bump on `(a, b)` at `x`.
fn bump_jet(a: f64, b: f64, x: f64, order: usize) -> Jet {
    if x <= a || x >= b {
        return Jet::zero(order);
    }
    let w = b - a;
    // 1 − u² = (1 − u)(1 + u) evaluated from the distances to each end.
    let (one_minus, one_plus) = (2.0 * (b - x) / w, 2.0 * (x - a) / w);
    let q0 = one_minus * one_plus;
    if 1.0 / q0 > 745.0 {
        // exp(−1/q) underflows; keep the jet exactly zero instead of 0·∞.
        return Jet::zero(order);
    }
    let u0 = 1.0 - one_minus;
    let q = Jet::from_coeffs(order, &[q0, -2.0 * u0, -1.0]);
    let inner = -(q.recip());
    inner.exp().scale_argument(2.0 / w)
}

fn step_jet(kind: CutoffKind, x: f64, order: usize) -> Jet {
    if x <= 1.0 {
        return Jet::zero(order);
    }
    if x >= 2.0 {
        return Jet::constant(order, 1.0);
    }
    match kind {
        CutoffKind::BumpIntegral => {
            let z = bump_normalization();
            // φ is needed to absolute accuracy; relative accuracy of e^{-700}
            // sized tails is irrelevant.
            let opts = QuadOptions { rel_tol: 1e-14, abs_tol: 1e-18, ..QuadOptions::default() };
            let f = |t: f64| Ok::<_, ()>(bump_jet(1.0, 2.0, t, 0).value());
            // Integrate from the nearer end so both tails keep relative accuracy.
            let value = if x <= 1.5 {
                integrate(f, 1.0, x, &opts).expect("bump integral converges").value() / z
            } else {
                1.0 - integrate(f, x, 2.0, &opts).expect("bump integral converges").value() / z
            };
            let mut jet = Jet::constant(order, value);
            if order >= 1 {
                let b = bump_jet(1.0, 2.0, x, order - 1);
                let mut out = [0.0; MAX_ORDER + 1];
                out[0] = value;
                for k in 1..=order {
                    out[k] = b.coeff(k - 1) / (k as f64 * z);
                }
                jet = Jet::from_coeffs(order, &out[..=order]);
            }
            jet
        }
        CutoffKind::ExpRatio => {
            // φ = 1 / (1 + exp(1/(x−1) − 1/(2−x)))
            let h0 = 1.0 / (x - 1.0) - 1.0 / (2.0 - x);
            if h0 > 700.0 {
                return Jet::zero(order);
            }
            if h0 < -700.0 {
                return Jet::constant(order, 1.0);
            }
            let t = Jet::variable(order, x);
            let h = (t + -1.0).recip() - (-t + 2.0).recip();
            (h.exp() + 1.0).recip()
        }
    }
}

fn support_of(d: &Descriptor) -> (f64, f64) {
    match d {
        Descriptor::Zero { a, b } | Descriptor::Bump { a, b } => (*a, *b),
        Descriptor::Power { .. } => (0.0, f64::INFINITY),
        Descriptor::Step { .. } => (1.0, f64::INFINITY),
        Descriptor::Product { factors } => factors.iter().map(support_of).fold(
            (f64::NEG_INFINITY, f64::INFINITY),
            |(lo, hi), (a, b)| (lo.max(a), hi.min(b)),
        ),
        Descriptor::Sum { terms } => terms.iter().map(support_of).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        ),
        Descriptor::Multiple { inner, .. } => support_of(inner),
        Descriptor::Affine { scale, shift, inner } => {
            let (a, b) = support_of(inner);
            let (p, q) = ((a - shift) / scale, (b - shift) / scale);
            if *scale > 0.0 {
                (p, q)
            } else {
                (q, p)
            }
        }
        Descriptor::Extremizer(_) => unreachable!("expanded before use"),
    }
}

fn breakpoints_of(d: &Descriptor, out: &mut Vec<f64>) {
    match d {
        Descriptor::Zero { .. } | Descriptor::Bump { .. } | Descriptor::Power { .. } => {}
        Descriptor::Step { .. } => out.extend([1.0, 2.0]),
        Descriptor::Product { factors } => factors.iter().for_each(|f| breakpoints_of(f, out)),
        Descriptor::Sum { terms } => {
            for t in terms {
                let (a, b) = support_of(t);
                out.extend([a, b].into_iter().filter(|p| p.is_finite()));
                breakpoints_of(t, out);
            }
        }
        Descriptor::Multiple { inner, .. } => breakpoints_of(inner, out),
        Descriptor::Affine { scale, shift, inner } => {
            let mut inner_pts = Vec::new();
            breakpoints_of(inner, &mut inner_pts);
            out.extend(inner_pts.into_iter().map(|y| (y - shift) / scale));
        }
        Descriptor::Extremizer(_) => unreachable!("expanded before use"),
    }
}

fn eval_descriptor(d: &Descriptor, x: f64, order: usize) -> Jet {
    match d {
        Descriptor::Zero { .. } => Jet::zero(order),
        Descriptor::Bump { a, b } => bump_jet(*a, *b, x, order),
        Descriptor::Power { p } => {
            if x <= 0.0 {
                Jet::zero(order)
            } else {
                Jet::variable(order, x).powf(*p)
            }
        }
        Descriptor::Step { cutoff } => step_jet(*cutoff, x, order),
        Descriptor::Product { factors } => {
            let mut acc = Jet::constant(order, 1.0);
            for f in factors {
                let j = eval_descriptor(f, x, order);
                if j.is_zero() {
                    return Jet::zero(order);
                }
                acc = acc * j;
            }
            acc
        }
        Descriptor::Sum { terms } => {
            terms.iter().fold(Jet::zero(order), |acc, t| acc + eval_descriptor(t, x, order))
        }
        Descriptor::Multiple { c, inner } => eval_descriptor(inner, x, order) * *c,
        Descriptor::Affine { scale, shift, inner } => {
            eval_descriptor(inner, scale * x + shift, order).scale_argument(*scale)
        }
        Descriptor::Extremizer(_) => unreachable!("expanded before use"),
    }
}

fn expand(d: &Descriptor) -> Result<Descriptor, TestFunctionError> {
    Ok(match d {
        Descriptor::Extremizer(fam) => expand_extremizer(fam)?,
        Descriptor::Product { factors } => {
            Descriptor::Product { factors: factors.iter().map(expand).collect::<Result<_, _>>()? }
        }
        Descriptor::Sum { terms } => Descriptor::Sum { terms: terms.iter().map(expand).collect::<Result<_, _>>()? },
        Descriptor::Multiple { c, inner } => Descriptor::Multiple { c: *c, inner: Box::new(expand(inner)?) },
        Descriptor::Affine { scale, shift, inner } => {
            Descriptor::Affine { scale: *scale, shift: *shift, inner: Box::new(expand(inner)?) }
        }
        other => other.clone(),
    })
}

/// Working radius: instances with `ρ ≤ 2` are built at `ρ′ = 4` and pulled
/// back by `x ↦ (4/ρ)x`, preserving the cutoff geometry.
pub fn working_radius(rho: f64) -> f64 {
    if rho > 2.0 {
        rho
    } else {
        4.0
    }
}

fn expand_extremizer(fam: &ExtremizerFamily) -> Result<Descriptor, TestFunctionError> {
    let ExtremizerFamily { ell, m, ref alpha, rho, eps, cutoff } = *fam;
    if ell < 1 || ell > m {
        return Err(TestFunctionError::OrderRange { ell, m });
    }
    let work = working_radius(rho);
    if !(eps > 0.0 && 2.0 * eps < work - 2.0) {
        return Err(TestFunctionError::EpsilonTooLarge { eps, rho: work });
    }
    let coef = if ell == m {
        1.0
    } else {
        let den = signed_root_a(m, alpha);
        if den.is_zero() {
            return Err(TestFunctionError::Exceptional { m, alpha: alpha.to_string() });
        }
        signed_root_a(ell, alpha).to_f64() / den.to_f64()
    };
    let p = (2.0 * m as f64 - 1.0 - alpha.to_f64()) / 2.0;
    let step = Descriptor::Step { cutoff };
    let body = Descriptor::Product {
        factors: vec![
            Descriptor::Power { p }.times(coef),
            step.clone().scaled(1.0 / eps),
            Descriptor::Affine { scale: -1.0, shift: work, inner: Box::new(step) },
        ],
    };
    Ok(if work == rho { body } else { body.scaled(work / rho) })
}

impl JetFunction {
    pub fn new(descriptor: Descriptor, max_order: usize) -> Result<Self, TestFunctionError> {
        if max_order > MAX_ORDER {
            return Err(TestFunctionError::OrderTooHigh { requested: max_order, max: MAX_ORDER });
        }
        let expanded = expand(&descriptor)?;
        let support = support_of(&expanded);
        if !(support.0 < support.1) {
            return Err(TestFunctionError::InvalidSupport { a: support.0, b: support.1 });
        }
        let mut breakpoints = Vec::new();
        breakpoints_of(&expanded, &mut breakpoints);
        breakpoints.retain(|&p| p > support.0 && p < support.1);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(JetFunction { descriptor, expanded, support, breakpoints, max_order })
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    /// Open interval outside of which the function vanishes identically.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn has_compact_support(&self) -> bool {
        self.support.0.is_finite() && self.support.1.is_finite()
    }

    /// Interior seams where the integrand changes character.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// True when the recipe is structurally zero.
    pub fn is_identically_zero(&self) -> bool {
        fn zero(d: &Descriptor) -> bool {
            match d {
                Descriptor::Zero { .. } => true,
                Descriptor::Product { factors } => factors.iter().any(zero),
                Descriptor::Sum { terms } => terms.iter().all(zero),
                Descriptor::Multiple { c, inner } => *c == 0.0 || zero(inner),
                Descriptor::Affine { inner, .. } => zero(inner),
                _ => false,
            }
        }
        zero(&self.expanded)
    }

    /// Jet `(f(x), f′(x), …)` to `order ≤ max_order`; exactly zero outside
    /// the support.
    pub fn eval_jet(&self, x: f64, order: usize) -> Jet {
        assert!(order <= self.max_order, "jet order {order} above configured {}", self.max_order);
        if x <= self.support.0 || x >= self.support.1 {
            return Jet::zero(order);
        }
        eval_descriptor(&self.expanded, x, order)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_jet(x, 0).value()
    }

    pub fn with_order(&self, max_order: usize) -> Result<Self, TestFunctionError> {
        JetFunction::new(self.descriptor.clone(), max_order)
    }

    pub fn product(&self, other: &JetFunction) -> Result<Self, TestFunctionError> {
        let d = Descriptor::Product { factors: vec![self.descriptor.clone(), other.descriptor.clone()] };
        JetFunction::new(d, self.max_order.min(other.max_order))
    }

    /// `x ↦ f(λx)`.
    pub fn scaled(&self, lambda: f64) -> Result<Self, TestFunctionError> {
        JetFunction::new(self.descriptor.clone().scaled(lambda), self.max_order)
    }

    pub fn times(&self, c: f64) -> Result<Self, TestFunctionError> {
        JetFunction::new(self.descriptor.clone().times(c), self.max_order)
    }
}

pub fn bump(a: f64, b: f64, max_order: usize) -> Result<JetFunction, TestFunctionError> {
    if !(a < b) {
        return Err(TestFunctionError::InvalidSupport { a, b });
    }
    JetFunction::new(Descriptor::Bump { a, b }, max_order)
}

pub fn zero(a: f64, b: f64, max_order: usize) -> Result<JetFunction, TestFunctionError> {
    JetFunction::new(Descriptor::Zero { a, b }, max_order)
}

/// The cutoff `φ`.
pub fn smooth_step(max_order: usize) -> JetFunction {
    cutoff(CutoffKind::BumpIntegral, max_order)
}

pub fn cutoff(kind: CutoffKind, max_order: usize) -> JetFunction {
    JetFunction::new(Descriptor::Step { cutoff: kind }, max_order).expect("step is well formed")
}

pub fn extremizer(family: &ExtremizerFamily, max_order: usize) -> Result<JetFunction, TestFunctionError> {
    JetFunction::new(Descriptor::Extremizer(family.clone()), max_order)
}

/// A finite-dimensional vector of functions sharing one support.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFunction {
    components: Vec<JetFunction>,
    support: (f64, f64),
}

impl VectorFunction {
    pub fn components(&self) -> &[JetFunction] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn max_order(&self) -> usize {
        self.components.iter().map(JetFunction::max_order).min().unwrap_or(0)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.components.iter().flat_map(|c| c.breakpoints().iter().copied()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `‖f(x)‖² = Σ_i f_i(x)²`.
    pub fn norm_sq(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.eval(x).powi(2)).sum()
    }
}

pub fn vector_function(components: Vec<JetFunction>) -> Result<VectorFunction, TestFunctionError> {
    let first = components.first().ok_or(TestFunctionError::NoComponents)?.support();
    if components.iter().any(|c| c.support() != first) {
        return Err(TestFunctionError::MismatchedSupport);
    }
    Ok(VectorFunction { components, support: first })
}

impl From<JetFunction> for VectorFunction {
    fn from(f: JetFunction) -> Self {
        let support = f.support();
        VectorFunction { components: vec![f], support }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::constant_a_f64;

    #[test]
    fn bump_examples() {
        let f = bump(-1.0, 1.0, 4).unwrap();
        assert_eq!(f.eval(0.0), (-1f64).exp());
        assert!(f.eval_jet(1.0, 4).is_zero());
        assert!(f.eval_jet(-1.0, 4).is_zero());
        let g = bump(0.0, 1.0, 2).unwrap();
        let h = 1e-5;
        let fd = (g.eval(0.25 + h) - g.eval(0.25 - h)) / (2.0 * h);
        let d = g.eval_jet(0.25, 1).derivative(1);
        assert!((fd - d).abs() <= 1e-6 * d.abs());
    }

    #[test]
    fn bump_near_edges_is_finite() {
        let f = bump(1e-8, 2e-8, 6).unwrap();
        for x in [1.0000001e-8, 1.5e-8, 1.9999999e-8] {
            let j = f.eval_jet(x, 6);
            assert!(j.derivatives().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn step_examples() {
        for kind in [CutoffKind::BumpIntegral, CutoffKind::ExpRatio] {
            let phi = cutoff(kind, 3);
            assert_eq!(phi.eval(1.0), 0.0);
            assert_eq!(phi.eval(2.0), 1.0);
            let mid = phi.eval(1.5);
            assert!(mid > 0.0 && mid < 1.0);
            assert!(phi.eval(1.3) < phi.eval(1.7));
        }
        // ∫₁² φ′ = 1 and the jet's derivative matches finite differences.
        let phi = smooth_step(2);
        let r = integrate(|x| Ok::<_, ()>(phi.eval_jet(x, 1).derivative(1)), 1.0, 2.0, &QuadOptions::default())
            .unwrap();
        assert!((r.value() - 1.0).abs() < 1e-12);
        let (x, h) = (1.37, 1e-5);
        let fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
        assert!((fd - phi.eval_jet(x, 1).derivative(1)).abs() < 1e-8);
    }

    #[test]
    fn extremizer_plateau_identity() {
        let fam = ExtremizerFamily { ell: 1, m: 1, alpha: Alpha::zero(), rho: 8.0, eps: 1e-3, cutoff: CutoffKind::default() };
        let y = extremizer(&fam, 2).unwrap();
        assert_eq!(y.eval(1e-3), 0.0);
        assert_eq!(y.eval(5e-4), 0.0);
        let a = constant_a_f64(1, &Alpha::zero());
        for x in [0.01, 0.5, 3.0, 5.9] {
            let d = y.eval_jet(x, 1).derivative(1);
            assert!((d * d - a / x).abs() <= 1e-12 * a / x);
        }
        assert_eq!(y.breakpoints(), &[2e-3, 6.0]);
    }

    #[test]
    fn shifted_extremizer_plateau() {
        let fam = ExtremizerFamily { ell: 1, m: 2, alpha: Alpha::zero(), rho: 8.0, eps: 1e-3, cutoff: CutoffKind::default() };
        let f = extremizer(&fam, 2).unwrap();
        for x in [0.1, 2.0, 5.0] {
            let d = f.eval_jet(x, 1).derivative(1);
            assert!((d - x.sqrt()).abs() < 1e-13 * x.sqrt());
        }
        let bad = ExtremizerFamily { alpha: Alpha::int(3), ..fam.clone() };
        assert!(matches!(extremizer(&bad, 2), Err(TestFunctionError::Exceptional { .. })));
        let big = ExtremizerFamily { eps: 3.5, ..fam };
        assert!(matches!(extremizer(&big, 2), Err(TestFunctionError::EpsilonTooLarge { .. })));
    }

    #[test]
    fn small_radius_is_rescaled() {
        let fam = ExtremizerFamily { ell: 1, m: 1, alpha: Alpha::zero(), rho: 1.0, eps: 1e-2, cutoff: CutoffKind::default() };
        let y = extremizer(&fam, 1).unwrap();
        let (a, b) = y.support();
        assert!((a - 0.0025).abs() < 1e-15 && (b - 0.75).abs() < 1e-15);
    }

    #[test]
    fn descriptor_round_trip() {
        let fam = ExtremizerFamily { ell: 1, m: 2, alpha: Alpha::from_ratio(1, 2).unwrap(), rho: 4.0, eps: 1e-2, cutoff: CutoffKind::ExpRatio };
        let d = Descriptor::Product { factors: vec![Descriptor::Extremizer(fam), Descriptor::Bump { a: 0.0, b: 3.0 }] };
        let s = serde_json::to_string(&d).unwrap();
        let back: Descriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn vector_supports() {
        let a = bump(0.0, 1.0, 2).unwrap();
        let b = bump(0.0, 2.0, 2).unwrap();
        assert_eq!(vector_function(vec![a.clone(), b]), Err(TestFunctionError::MismatchedSupport));
        let v = vector_function(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(v.norm_sq(0.3), 2.0 * a.eval(0.3).powi(2));
        assert_eq!(vector_function(vec![]), Err(TestFunctionError::NoComponents));
    }
}
