//! Adaptive panelled tanh-sinh quadrature for vector-valued integrands.
//!
//! Every component is integrated on the same panels, so related integrals
//! (left side, the individual weight terms) come out of one pass with
//! consistent errors. Nodes are placed by their distance to the nearer panel
//! end and abscissae that round onto an endpoint are skipped, so integrands
//! are never evaluated on the boundary.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-10, abs_tol: 1e-14, max_panels: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadResult {
    pub values: Vec<f64>,
    /// Per-component absolute error estimates.
    pub abs_errors: Vec<f64>,
    pub panels: usize,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn abs_error(&self) -> f64 {
        self.abs_errors[0]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError<E> {
    #[error("integrand failed: {0}")]
    Integrand(E),
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("tolerance not met within {} panels", .0.panels)]
    PanelLimit(QuadResult),
    #[error("invalid interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
}

/// One half of the symmetric node set on the reference interval `[-1, 1]`.
struct Node {
    /// Distance from the nearer end, `1 − |x|`.
    dist: f64,
    weight: f64,
    /// Node also belongs to the coarser (doubled step) rule.
    coarse: bool,
    /// Weight left beyond this node in the fine and the coarse rule.
    fine_tail: f64,
    coarse_tail: f64,
}

const LEVEL_STEP: f64 = 1.0 / 16.0;

fn nodes() -> &'static [Node] {
    static NODES: OnceLock<Vec<Node>> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = Vec::new();
        for i in 1.. {
            let t = i as f64 * LEVEL_STEP;
            let u = FRAC_PI_2 * t.sinh();
            // 1 − tanh(u) without cancellation
            let dist = 2.0 / (1.0 + (2.0 * u).exp());
            let weight = LEVEL_STEP * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            if dist < 1e-300 || weight < 1e-300 {
                break;
            }
            out.push(Node { dist, weight, coarse: i % 2 == 0, fine_tail: 0.0, coarse_tail: 0.0 });
        }
        let (mut fine, mut coarse) = (0.0, 0.0);
        for n in out.iter_mut().rev() {
            n.fine_tail = fine;
            n.coarse_tail = coarse;
            fine += n.weight;
            if n.coarse {
                coarse += 2.0 * n.weight;
            }
        }
        out
    })
}

struct Panel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    abs_values: Vec<f64>,
    errors: Vec<f64>,
}

struct Sums {
    fine: Vec<f64>,
    coarse: Vec<f64>,
    abs: Vec<f64>,
}

impl Sums {
    fn add(&mut self, v: &[f64], fine_w: f64, coarse_w: f64) {
        for (c, &y) in v.iter().enumerate() {
            self.fine[c] += fine_w * y;
            self.coarse[c] += coarse_w * y;
            self.abs[c] += fine_w * y.abs();
        }
    }
}

fn eval_panel<F, E>(f: &mut F, a: f64, b: f64, dim: usize, evals: &mut usize) -> Result<Panel, QuadError<E>>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
{
    let half = 0.5 * (b - a);
    let mid = a + half;
    let mut sums = Sums { fine: vec![0.0; dim], coarse: vec![0.0; dim], abs: vec![0.0; dim] };
    let mut buf = vec![0.0; dim];

    let mut call = |x: f64, buf: &mut [f64], f: &mut F| -> Result<(), QuadError<E>> {
        buf.iter_mut().for_each(|v| *v = 0.0);
        f(x, buf).map_err(QuadError::Integrand)?;
        *evals += 1;
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite { x });
        }
        Ok(())
    };

    let w0 = LEVEL_STEP * FRAC_PI_2;
    call(mid, &mut buf, f)?;
    sums.add(&buf, w0, 2.0 * w0);

    // Nodes go in (fine-only, shared) pairs so both rules stop at the same
    // depth. The ends run out of representable abscissae independently (near
    // zero far later); the weight beyond the last node is charged to the last
    // value so the two rules stay consistent on short panels.
    let all = nodes();
    for (side, sign) in [(a, 1.0), (b, -1.0)] {
        let mut last: Option<&Node> = None;
        for pair in all.chunks(2) {
            let deepest = side + sign * half * pair[pair.len() - 1].dist;
            if deepest == side {
                break;
            }
            for node in pair {
                call(side + sign * half * node.dist, &mut buf, f)?;
                let cw = if node.coarse { 2.0 * node.weight } else { 0.0 };
                sums.add(&buf, node.weight, cw);
                last = Some(node);
            }
        }
        if let Some(node) = last {
            sums.add(&buf, node.fine_tail, node.coarse_tail);
        }
    }

    let values: Vec<f64> = sums.fine.iter().map(|v| v * half).collect();
    let errors = sums.fine.iter().zip(&sums.coarse).map(|(p, q)| (p - q).abs() * half).collect();
    let abs_values = sums.abs.iter().map(|v| v * half).collect();
    Ok(Panel { a, b, values, abs_values, errors })
}

/// Integrates a `dim`-component integrand over `[a, b]`. `breakpoints`
/// strictly inside the interval seed the initial panels.
pub fn integrate_vec<F, E>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError<E>>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::Interval { a, b });
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);

    let mut evals = 0;
    let mut panels = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        panels.push(eval_panel(&mut f, w[0], w[1], dim, &mut evals)?);
    }

    loop {
        let mut values = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        let mut errors = vec![0.0; dim];
        for p in &panels {
            for c in 0..dim {
                values[c] += p.values[c];
                scale[c] += p.abs_values[c];
                errors[c] += p.errors[c];
            }
        }
        let tol: Vec<f64> = scale.iter().map(|s| opts.abs_tol + opts.rel_tol * s).collect();
        let done = (0..dim).all(|c| errors[c] <= tol[c]);
        let result = QuadResult { values, abs_errors: errors, panels: panels.len(), evaluations: evals };
        if done {
            return Ok(result);
        }
        if panels.len() >= opts.max_panels {
            return Err(QuadError::PanelLimit(result));
        }
        // Bisect the panel contributing most to the worst normalized error.
        let worst = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (0..dim).map(|c| p.errors[c] / tol[c]).fold(0.0, f64::max)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(QuadError::PanelLimit(result));
        }
        panels.push(eval_panel(&mut f, p.a, m, dim, &mut evals)?);
        panels.push(eval_panel(&mut f, m, p.b, dim, &mut evals)?);
        // Keep panel order deterministic for reproducible sums.
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// Scalar convenience wrapper over [`integrate_vec`].
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult, QuadError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    integrate_vec(
        |x, out: &mut [f64]| {
            out[0] = f(x)?;
            Ok(())
        },
        1,
        a,
        b,
        &[],
        opts,
    )
}

/// Integrates over `[a, ∞)` through `x = a + t/(1 − t)`.
pub fn integrate_exterior_vec<F, E>(
    mut f: F,
    dim: usize,
    a: f64,
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError<E>>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
{
    integrate_vec(
        |t, out: &mut [f64]| {
            let s = 1.0 - t;
            let x = a + t / s;
            if !x.is_finite() {
                return Ok(());
            }
            f(x, out)?;
            let jac = 1.0 / (s * s);
            out.iter_mut().for_each(|v| *v *= jac);
            Ok(())
        },
        dim,
        0.0,
        1.0,
        &[],
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(v: f64) -> Result<f64, Infallible> {
        Ok(v)
    }

    #[test]
    fn polynomial_and_exp() {
        let o = QuadOptions::default();
        let r = integrate(|x| ok(x * x), 0.0, 3.0, &o).unwrap();
        assert!((r.value() - 9.0).abs() < 1e-13);
        let r = integrate(|x: f64| ok(x.exp()), -1.0, 2.0, &o).unwrap();
        let exact = 2f64.exp() - (-1f64).exp();
        assert!((r.value() - exact).abs() < 1e-12);
        assert!(r.abs_error() <= 1e-9);
    }

    #[test]
    fn endpoint_singularity() {
        let o = QuadOptions::default();
        let r = integrate(|x: f64| ok(1.0 / x.sqrt()), 0.0, 1.0, &o).unwrap();
        assert!((r.value() - 2.0).abs() < 1e-12, "{r:?}");
        let r = integrate(|x: f64| ok(x.ln()), 0.0, 1.0, &o).unwrap();
        assert!((r.value() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn never_evaluates_endpoints() {
        let o = QuadOptions::default();
        let r = integrate(
            |x: f64| {
                assert!(x > 1.0 && x < 2.0, "evaluated at {x}");
                ok(1.0)
            },
            1.0,
            2.0,
            &o,
        )
        .unwrap();
        assert!((r.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vector_components_share_panels() {
        let o = QuadOptions::default();
        let r = integrate_vec(
            |x: f64, out: &mut [f64]| -> Result<(), Infallible> {
                out[0] = x.sin();
                out[1] = x.cos();
                out[2] = (x - 0.5).abs();
                Ok(())
            },
            3,
            0.0,
            1.0,
            &[0.5],
            &o,
        )
        .unwrap();
        assert!((r.values[0] - (1.0 - 1f64.cos())).abs() < 1e-13);
        assert!((r.values[1] - 1f64.sin()).abs() < 1e-13);
        assert!((r.values[2] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn exterior_gaussian() {
        let o = QuadOptions::default();
        let r = integrate_exterior_vec(
            |x: f64, out: &mut [f64]| -> Result<(), Infallible> {
                out[0] = (-x * x).exp();
                Ok(())
            },
            1,
            0.0,
            &o,
        )
        .unwrap();
        assert!((r.value() - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn panel_cap_reports_failure() {
        let o = QuadOptions { max_panels: 4, ..QuadOptions::default() };
        let r = integrate(|x: f64| ok((50.0 * x).sin() * (x - 0.3).abs().sqrt()), 0.0, 1.0, &o);
        assert!(matches!(r, Err(QuadError::PanelLimit(_))));
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(|x: f64| if x > 0.5 { Err("boom") } else { Ok(1.0) }, 0.0, 1.0, &QuadOptions::default());
        assert_eq!(r, Err(QuadError::Integrand("boom")));
    }
}
