use super::gig::GigParams;
use super::woodbury::{woodbury_inverse, LowRankCov};
use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, log_bessel_k, log_bessel_k_pair};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{LN_2, PI};

/// Smallest skewness norm accepted by the density; the formula has a
/// removable singularity at `α = 0`.
pub const MIN_SKEWNESS_NORM: f64 = 1e-8;

/// Skew-t parameters with a dense scale matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewTParams {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub nu: f64,
}

/// A skew-t law with its scale inverse and all x-independent terms cached.
///
/// Build once per component, then evaluate many points.
#[derive(Debug, Clone)]
pub struct SkewT {
    mu: DVector<f64>,
    nu: f64,
    precision: DMatrix<f64>,
    log_det: f64,
    prec_alpha: DVector<f64>,
    alpha_quad: f64,
    log_const: f64,
}

impl SkewT {
    /// From a dense scale matrix (Cholesky).
    pub fn new(params: &SkewTParams) -> Result<Self> {
        let p = params.mu.len();
        if params.sigma.shape() != (p, p) || params.alpha.len() != p {
            return Err(Error::Domain(format!(
                "skew-t dimensions disagree: mu {p}, sigma {:?}, alpha {}",
                params.sigma.shape(),
                params.alpha.len()
            )));
        }
        let chol = params
            .sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Decomposition("skew-t scale matrix is not positive definite".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let precision = chol.inverse();
        Self::from_precision(params.mu.clone(), precision, log_det, params.alpha.clone(), params.nu)
    }

    /// From a `ΛΛ' + Ψ` scale via the Woodbury identity.
    pub fn from_low_rank(mu: DVector<f64>, cov: &LowRankCov, alpha: DVector<f64>, nu: f64) -> Result<Self> {
        if cov.dim() != mu.len() {
            return Err(Error::Domain("covariance and location dimensions disagree".into()));
        }
        let (precision, log_det) = woodbury_inverse(cov)?;
        Self::from_precision(mu, precision, log_det, alpha, nu)
    }

    /// From an already inverted scale matrix and its log-determinant.
    pub fn from_precision(
        mu: DVector<f64>,
        precision: DMatrix<f64>,
        log_det: f64,
        alpha: DVector<f64>,
        nu: f64,
    ) -> Result<Self> {
        let p = mu.len();
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
        }
        if alpha.len() != p || precision.shape() != (p, p) {
            return Err(Error::Domain("skew-t dimensions disagree".into()));
        }
        if alpha.norm() < MIN_SKEWNESS_NORM {
            return Err(Error::Domain(format!(
                "skewness norm {:.3e} is below {MIN_SKEWNESS_NORM:e}",
                alpha.norm()
            )));
        }
        let prec_alpha = &precision * &alpha;
        let alpha_quad = alpha.dot(&prec_alpha);
        if !(alpha_quad > 0.0) || !alpha_quad.is_finite() {
            return Err(Error::Numerical(format!("alpha' Sigma^-1 alpha = {alpha_quad}")));
        }
        let pf = p as f64;
        let log_const = 0.5 * nu * nu.ln() - 0.5 * pf * (2.0 * PI).ln() - 0.5 * log_det
            - ln_gamma(0.5 * nu)?
            - (0.5 * nu - 1.0) * LN_2
            + 0.25 * (nu + pf) * alpha_quad.ln();
        Ok(Self {
            mu,
            nu,
            precision,
            log_det,
            prec_alpha,
            alpha_quad,
            log_const,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `α'Σ⁻¹α`.
    pub fn alpha_quad(&self) -> f64 {
        self.alpha_quad
    }

    /// Order `-(ν+p)/2` of the Bessel function in the density, which is also
    /// the GIG index of the latent scale given `x`.
    pub fn bessel_order(&self) -> f64 {
        -0.5 * (self.nu + self.dim() as f64)
    }

    /// `(δ(x,μ|Σ), (x−μ)'Σ⁻¹α)` for one point.
    pub fn point_terms(&self, x: &DVector<f64>) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        let centered = x - &self.mu;
        let delta = centered.dot(&(&self.precision * &centered));
        Ok((delta.max(0.0), centered.dot(&self.prec_alpha)))
    }

    /// Row-wise `(δ, cross)` for an n×p data matrix.
    pub fn row_terms(&self, data: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mu.transpose();
        }
        let weighted = &centered * &self.precision;
        let cross = &centered * &self.prec_alpha;
        let delta = centered
            .row_iter()
            .zip(weighted.row_iter())
            .map(|(c, w)| c.dot(&w).max(0.0))
            .collect();
        (delta, cross.iter().copied().collect())
    }

    /// Conditional law of the latent scale: `GIG(α'Σ⁻¹α, ν+δ, −(ν+p)/2)`.
    pub fn conditional_gig(&self, delta: f64) -> GigParams {
        GigParams {
            psi: self.alpha_quad,
            chi: self.nu + delta,
            lambda: self.bessel_order(),
        }
    }

    /// Log density from precomputed point terms.
    pub fn ln_pdf_terms(&self, delta: f64, cross: f64) -> Result<f64> {
        let chi = self.nu + delta;
        let log_k = log_bessel_k(self.bessel_order(), (self.alpha_quad * chi).sqrt())?;
        Ok(self.assemble(chi, log_k, cross))
    }

    /// Log density together with `log K_λ` and `log K_{λ+1}` at the same
    /// argument, shared with the GIG expectations.
    pub fn ln_pdf_with_bessel(&self, delta: f64, cross: f64) -> Result<(f64, f64, f64)> {
        let chi = self.nu + delta;
        let (log_k, log_k_next) = log_bessel_k_pair(self.bessel_order(), (self.alpha_quad * chi).sqrt())?;
        Ok((self.assemble(chi, log_k, cross), log_k, log_k_next))
    }

    fn assemble(&self, chi: f64, log_k: f64, cross: f64) -> f64 {
        self.log_const - 0.25 * (self.nu + self.dim() as f64) * chi.ln() + log_k + cross
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let (delta, cross) = self.point_terms(x)?;
        self.ln_pdf_terms(delta, cross)
    }
}

/// Log skew-t density at `x`.
pub fn skew_t_log_density(x: &DVector<f64>, params: &SkewTParams) -> Result<f64> {
    SkewT::new(params)?.ln_pdf(x)
}

/// GIG law of the latent scale given `x`.
pub fn conditional_gig_given_x(x: &DVector<f64>, params: &SkewTParams) -> Result<GigParams> {
    let law = SkewT::new(params)?;
    let (delta, _) = law.point_terms(x)?;
    Ok(law.conditional_gig(delta))
}
