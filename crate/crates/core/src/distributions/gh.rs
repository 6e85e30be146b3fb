use crate::error::{Error, Result};
use crate::specfun::log_bessel_k;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Generalized hyperbolic parameters `(λ, χ, ψ, μ, Σ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhParams {
    pub lambda_gh: f64,
    pub chi_gh: f64,
    pub psi_gh: f64,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub alpha: DVector<f64>,
}

/// Log density of the generalized hyperbolic distribution at `x`.
pub fn gh_log_density(x: &DVector<f64>, params: &GhParams) -> Result<f64> {
    let p = params.mu.len();
    if x.len() != p || params.alpha.len() != p || params.sigma.shape() != (p, p) {
        return Err(Error::Domain("generalized hyperbolic dimensions disagree".into()));
    }
    let GhParams {
        lambda_gh: lambda,
        chi_gh: chi,
        psi_gh: psi,
        ..
    } = *params;
    if !(chi > 0.0 && psi > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "generalized hyperbolic requires chi, psi > 0, got chi={chi}, psi={psi}"
        )));
    }
    let chol = params
        .sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Decomposition("GH scale matrix is not positive definite".into()))?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let centered = x - &params.mu;
    let solved = chol.solve(&centered);
    let prec_alpha = chol.solve(&params.alpha);
    let delta = centered.dot(&solved).max(0.0);
    let alpha_quad = params.alpha.dot(&prec_alpha);
    let cross = centered.dot(&prec_alpha);

    let half_p = 0.5 * p as f64;
    let outer = chi + delta;
    let inner = psi + alpha_quad;
    Ok(0.5 * (lambda - half_p) * (outer.ln() - inner.ln())
        + 0.5 * lambda * (psi.ln() - chi.ln())
        + log_bessel_k(lambda - half_p, (inner * outer).sqrt())?
        - half_p * (2.0 * PI).ln()
        - 0.5 * log_det
        - log_bessel_k(lambda, (chi * psi).sqrt())?
        + cross)
}
