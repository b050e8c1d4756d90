//! The leading-constant ratio along the mollified extremizer family.
//!
//! For the family `y_ε` (or its shifted variant when `ℓ < m`),
//! `R(ε) = ∫ x^α |y_ε^{(m)}|² / (A(ℓ,α) ∫ x^{α−2ℓ} |y_ε^{(m−ℓ)}|²)`
//! tends to 1 like `1 + O(1/ln(1/ε))`.

use serde::Serialize;

use crate::exact::{constant_a_f64, Alpha};
use crate::quadrature::{integrate_vec, QuadError, QuadOptions};
use crate::testfunctions::{extremizer, CutoffKind, ExtremizerFamily, TestFunctionError};
use crate::verifier::BUDGET_FACTOR;

/// `ε = 10^{−2}, …, 10^{−8}`.
pub fn default_eps_grid() -> Vec<f64> {
    (2..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SharpnessError {
    #[error("A(ℓ, α) = 0 for ℓ = {ell}, α = {alpha}: the ratio is undefined")]
    Exceptional { ell: u32, alpha: String },
    #[error(transparent)]
    Family(#[from] TestFunctionError),
    #[error("quadrature failed at ε = {eps}: {reason}")]
    Quadrature { eps: f64, reason: String },
    #[error("ε grid must be strictly decreasing and positive")]
    Grid,
    #[error("rate fit needs at least 4 points (got {0})")]
    TooFewPoints(usize),
    #[error("ratios are not monotone in ε beyond their error bars (between ε = {0} and ε = {1})")]
    NonMonotone(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessParams {
    pub ell: u32,
    pub m: u32,
    pub alpha: Alpha,
    pub rho: f64,
    pub cutoff: CutoffKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub eps: f64,
    pub ratio: f64,
    pub error_bar: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Evaluates `R(ε)`.
pub fn sharpness_ratio(params: &SharpnessParams, eps: f64, opts: &QuadOptions) -> Result<RatioPoint, SharpnessError> {
    let a = constant_a_f64(params.ell, &params.alpha);
    if a == 0.0 {
        return Err(SharpnessError::Exceptional { ell: params.ell, alpha: params.alpha.to_string() });
    }
    let family = ExtremizerFamily {
        ell: params.ell,
        m: params.m,
        alpha: params.alpha.clone(),
        rho: params.rho,
        eps,
        cutoff: params.cutoff,
    };
    let m = params.m as usize;
    let low = m - params.ell as usize;
    let f = extremizer(&family, m)?;
    let alpha = params.alpha.to_f64();
    let shift = alpha - 2.0 * params.ell as f64;
    let (lo, hi) = f.support();
    let r = integrate_vec(
        |x: f64, out: &mut [f64]| -> Result<(), ()> {
            let j = f.eval_jet(x, m);
            out[0] = x.powf(alpha) * j.derivative(m).powi(2);
            out[1] = a * x.powf(shift) * j.derivative(low).powi(2);
            Ok(())
        },
        2,
        lo,
        hi,
        f.breakpoints(),
        opts,
    )
    .map_err(|e: QuadError<()>| SharpnessError::Quadrature { eps, reason: format!("{e:?}") })?;
    let (num, den) = (r.values[0], r.values[1]);
    let ratio = num / den;
    let rel = r.abs_errors[0] / num.abs() + r.abs_errors[1] / den.abs();
    Ok(RatioPoint { eps, ratio, error_bar: BUDGET_FACTOR * rel * ratio.abs(), numerator: num, denominator: den })
}

/// Fit of `R(ε) ≈ limit + C / ln(1/ε)` plus boundedness diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub limit: f64,
    pub c: f64,
    pub max_residual: f64,
    /// `(R(ε) − 1) · ln(1/ε)` per grid point.
    pub scaled_excess: Vec<f64>,
    /// `max / min` of `scaled_excess`; infinite if any entry is not positive.
    pub boundedness_ratio: f64,
    /// Limit of the three-parameter model `R = (L + β)/(γL + δ)`,
    /// `L = ln(1/ε)`, which the ratio follows exactly for pure power profiles.
    pub rational_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessSweep {
    pub params: SharpnessParams,
    pub ratios: Vec<RatioPoint>,
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

pub fn sweep(params: &SharpnessParams, eps_grid: &[f64], opts: &QuadOptions) -> Result<SharpnessSweep, SharpnessError> {
    if eps_grid.iter().any(|&e| !(e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SharpnessError::Grid);
    }
    let ratios = eps_grid
        .iter()
        .map(|&e| sharpness_ratio(params, e, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let (fit, fit_error) = match rate_fit(&ratios) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SharpnessSweep { params: params.clone(), ratios, fit, fit_error })
}

/// Solves the normal equations of a small dense least-squares problem.
fn least_squares<const K: usize>(rows: &[([f64; K], f64)]) -> [f64; K] {
    let mut ata = [[0.0; K]; K];
    let mut atb = [0.0; K];
    for (r, y) in rows {
        for i in 0..K {
            atb[i] += r[i] * y;
            for j in 0..K {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..K {
        let piv = (col..K).max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs())).unwrap_or(col);
        ata.swap(col, piv);
        atb.swap(col, piv);
        for row in col + 1..K {
            let f = ata[row][col] / ata[col][col];
            for j in col..K {
                ata[row][j] -= f * ata[col][j];
            }
            atb[row] -= f * atb[col];
        }
    }
    let mut x = [0.0; K];
    for i in (0..K).rev() {
        let s: f64 = (i + 1..K).map(|j| ata[i][j] * x[j]).sum();
        x[i] = (atb[i] - s) / ata[i][i];
    }
    x
}

/// Least-squares fit of `R ≈ limit + C·z`, `z = 1/ln(1/ε)`.
pub fn rate_fit(points: &[RatioPoint]) -> Result<RateFit, SharpnessError> {
    if points.len() < 4 {
        return Err(SharpnessError::TooFewPoints(points.len()));
    }
    for w in points.windows(2) {
        // R must not grow as ε shrinks.
        if w[1].ratio - w[0].ratio > w[0].error_bar + w[1].error_bar {
            return Err(SharpnessError::NonMonotone(w[0].eps, w[1].eps));
        }
    }
    let big_l: Vec<f64> = points.iter().map(|p| (1.0 / p.eps).ln()).collect();
    let rows: Vec<([f64; 2], f64)> = points.iter().zip(&big_l).map(|(p, l)| ([1.0, 1.0 / l], p.ratio)).collect();
    let [limit, c] = least_squares(&rows);
    let max_residual = rows.iter().map(|(r, y)| (limit + c * r[1] - y).abs()).fold(0.0, f64::max);
    let scaled_excess: Vec<f64> = points.iter().zip(&big_l).map(|(p, l)| (p.ratio - 1.0) * l).collect();
    let boundedness_ratio = if scaled_excess.iter().all(|&v| v > 0.0) {
        let max = scaled_excess.iter().copied().fold(f64::MIN, f64::max);
        let min = scaled_excess.iter().copied().fold(f64::MAX, f64::min);
        max / min
    } else {
        f64::INFINITY
    };
    // R(γL + δ) − β = L
    let rational: Vec<([f64; 3], f64)> =
        points.iter().zip(&big_l).map(|(p, &l)| ([p.ratio * l, p.ratio, -1.0], l)).collect();
    let [gamma, _, _] = least_squares(&rational);
    Ok(RateFit { limit, c, max_residual, scaled_excess, boundedness_ratio, rational_limit: 1.0 / gamma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<RatioPoint> {
        default_eps_grid()
            .into_iter()
            .map(|eps| RatioPoint { eps, ratio: f((1.0 / eps).ln()), error_bar: 0.0, numerator: 0.0, denominator: 0.0 })
            .collect()
    }

    #[test]
    fn fit_recovers_its_model() {
        let fit = rate_fit(&synthetic(|l| 1.0 + 2.0 / l)).unwrap();
        assert!((fit.limit - 1.0).abs() < 1e-12);
        assert!((fit.c - 2.0).abs() < 1e-11);
        assert!(fit.max_residual < 1e-12);
        assert!((fit.boundedness_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rational_model_is_exact_on_its_family() {
        let fit = rate_fit(&synthetic(|l| (0.25 * l + 1.0) / (0.25 * l + 0.3))).unwrap();
        assert!((fit.rational_limit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let pts = synthetic(|l| 1.0 + 1.0 / l);
        assert_eq!(rate_fit(&pts[..3]), Err(SharpnessError::TooFewPoints(3)));
        let rising = synthetic(|l| 1.0 + l);
        assert!(matches!(rate_fit(&rising), Err(SharpnessError::NonMonotone(..))));
    }

    #[test]
    fn exceptional_alpha_rejected() {
        let p = SharpnessParams { ell: 1, m: 1, alpha: Alpha::int(1), rho: 4.0, cutoff: CutoffKind::default() };
        assert!(matches!(
            sharpness_ratio(&p, 1e-3, &QuadOptions::default()),
            Err(SharpnessError::Exceptional { .. })
        ));
    }

    #[test]
    fn grid_must_decrease() {
        let p = SharpnessParams { ell: 1, m: 1, alpha: Alpha::zero(), rho: 4.0, cutoff: CutoffKind::default() };
        assert_eq!(sweep(&p, &[1e-3, 1e-2, 1e-4, 1e-5], &QuadOptions::default()), Err(SharpnessError::Grid));
    }
}
