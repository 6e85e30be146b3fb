use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Covariance of the form `ΛΛ' + Ψ` with `Λ` p×q and `Ψ` diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankCov {
    pub loadings: DMatrix<f64>,
    pub psi_diag: DVector<f64>,
}

impl LowRankCov {
    pub fn new(loadings: DMatrix<f64>, psi_diag: DVector<f64>) -> Result<Self> {
        if loadings.nrows() != psi_diag.len() {
            return Err(Error::Domain(format!(
                "loadings have {} rows but psi has {} entries",
                loadings.nrows(),
                psi_diag.len()
            )));
        }
        if psi_diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("error variances must be positive and finite".into()));
        }
        Ok(Self { loadings, psi_diag })
    }

    pub fn dim(&self) -> usize {
        self.psi_diag.len()
    }

    pub fn factors(&self) -> usize {
        self.loadings.ncols()
    }

    /// Dense `ΛΛ' + Ψ`; for tests and small problems.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut sigma = &self.loadings * self.loadings.transpose();
        for j in 0..self.dim() {
            sigma[(j, j)] += self.psi_diag[j];
        }
        sigma
    }
}

/// Inverse and log-determinant of `ΛΛ' + Ψ` by the Woodbury identity.
///
/// Only the q×q matrix `I + Λ'Ψ⁻¹Λ` is factorized.
pub fn woodbury_inverse(cov: &LowRankCov) -> Result<(DMatrix<f64>, f64)> {
    let p = cov.dim();
    let q = cov.factors();
    let psi_inv = cov.psi_diag.map(|v| 1.0 / v);
    let mut log_det: f64 = cov.psi_diag.iter().map(|v| v.ln()).sum();
    let mut inv = DMatrix::from_diagonal(&psi_inv);
    if q == 0 {
        return Ok((inv, log_det));
    }
    // Ψ⁻¹Λ, p×q.
    let mut scaled = cov.loadings.clone();
    for (j, mut row) in scaled.row_iter_mut().enumerate() {
        row *= psi_inv[j];
    }
    let mut inner = cov.loadings.transpose() * &scaled;
    for k in 0..q {
        inner[(k, k)] += 1.0;
    }
    let chol = inner.cholesky().ok_or_else(|| {
        Error::Numerical(format!("Woodbury inner {q}x{q} matrix is not positive definite"))
    })?;
    log_det += 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    // inv = Ψ⁻¹ − (Ψ⁻¹Λ) M⁻¹ (Ψ⁻¹Λ)'
    let solved = chol.solve(&scaled.transpose());
    inv -= &scaled * solved;
    debug_assert_eq!(inv.nrows(), p);
    Ok((inv, log_det))
}
