use crate::error::{Error, Result};
use crate::specfun::{dlog_bessel_k_dorder, log_bessel_k, log_bessel_k_pair};

/// Parameters of a generalized inverse Gaussian law `GIG(ψ, χ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub psi: f64,
    pub chi: f64,
    pub lambda: f64,
}

impl GigParams {
    pub fn new(psi: f64, chi: f64, lambda: f64) -> Result<Self> {
        let params = Self { psi, chi, lambda };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.psi > 0.0 && self.chi > 0.0 && self.psi.is_finite() && self.chi.is_finite())
            || !self.lambda.is_finite()
        {
            return Err(Error::Domain(format!(
                "GIG requires psi > 0, chi > 0 and finite lambda, got ({}, {}, {})",
                self.psi, self.chi, self.lambda
            )));
        }
        Ok(())
    }

    /// Bessel argument `sqrt(ψχ)`.
    pub fn omega(&self) -> f64 {
        (self.psi * self.chi).sqrt()
    }
}

/// `E[Y]`, `E[1/Y]` and `E[log Y]` under a GIG law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigExpectations {
    pub e_y: f64,
    pub e_inv_y: f64,
    pub e_log_y: f64,
}

/// Log density of `GIG(ψ, χ, λ)` at `y > 0`.
pub fn gig_log_density(y: f64, params: &GigParams) -> Result<f64> {
    params.validate()?;
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("GIG density requires y > 0, got {y}")));
    }
    let GigParams { psi, chi, lambda } = *params;
    let log_k = log_bessel_k(lambda, params.omega())?;
    Ok(0.5 * lambda * (psi / chi).ln() + (lambda - 1.0) * y.ln()
        - std::f64::consts::LN_2
        - log_k
        - 0.5 * (psi * y + chi / y))
}

/// Closed-form GIG expectations.
pub fn gig_expectations(params: &GigParams) -> Result<GigExpectations> {
    params.validate()?;
    let omega = params.omega();
    let (log_k, log_k_next) = log_bessel_k_pair(params.lambda, omega)?;
    let dlog_k = dlog_bessel_k_dorder(params.lambda, omega)?;
    Ok(expectations_from_bessel(params, log_k, log_k_next, dlog_k))
}

/// Same as [`gig_expectations`] with the Bessel quantities supplied by the
/// caller: `log K_λ(ω)`, `log K_{λ+1}(ω)` and `∂_λ log K_λ(ω)` at `ω = sqrt(ψχ)`.
pub fn expectations_from_bessel(
    params: &GigParams,
    log_k: f64,
    log_k_next: f64,
    dlog_k: f64,
) -> GigExpectations {
    let GigParams { psi, chi, lambda } = *params;
    let ratio = (log_k_next - log_k).exp();
    let scale = (chi / psi).sqrt();
    GigExpectations {
        e_y: scale * ratio,
        e_inv_y: ratio / scale - 2.0 * lambda / chi,
        e_log_y: scale.ln() + dlog_k,
    }
}
