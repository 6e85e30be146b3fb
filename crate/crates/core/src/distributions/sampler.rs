use super::woodbury::LowRankCov;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Skew-t factor analyzer `X = μ + Yα + √Y(ΛU + ε)`, `Y ~ InvGamma(ν/2, ν/2)`.
#[derive(Debug, Clone)]
pub struct SkewTFactorSampler {
    mu: DVector<f64>,
    cov: LowRankCov,
    psi_sd: DVector<f64>,
    alpha: DVector<f64>,
    gamma: Gamma<f64>,
}

impl SkewTFactorSampler {
    pub fn new(mu: DVector<f64>, cov: LowRankCov, alpha: DVector<f64>, nu: f64) -> Result<Self> {
        if mu.len() != cov.dim() || alpha.len() != cov.dim() {
            return Err(Error::Domain("sampler dimensions disagree".into()));
        }
        // 1/Y ~ Gamma(shape ν/2, rate ν/2).
        let gamma = Gamma::new(0.5 * nu, 2.0 / nu)
            .map_err(|e| Error::Domain(format!("invalid degrees of freedom {nu}: {e}")))?;
        let psi_sd = cov.psi_diag.map(f64::sqrt);
        Ok(Self {
            mu,
            cov,
            psi_sd,
            alpha,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// One draw of `(x, y)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, f64) {
        let y = 1.0 / self.gamma.sample(rng);
        let q = self.cov.factors();
        let u = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut v = &self.cov.loadings * u;
        for j in 0..self.dim() {
            v[j] += self.psi_sd[j] * rng.sample::<f64, _>(StandardNormal);
        }
        let x = &self.mu + &self.alpha * y + v * y.sqrt();
        (x, y)
    }

    /// `n` draws as rows of an n×p matrix, plus the latent scales.
    pub fn sample_with_scales<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> (DMatrix<f64>, Vec<f64>) {
        let mut out = DMatrix::zeros(n, self.dim());
        let mut scales = Vec::with_capacity(n);
        for i in 0..n {
            let (x, y) = self.draw(rng);
            out.row_mut(i).copy_from(&x.transpose());
            scales.push(y);
        }
        (out, scales)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> DMatrix<f64> {
        self.sample_with_scales(rng, n).0
    }
}

/// Seeded generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` skew-t factor draws, deterministic in `seed`.
pub fn sample_skew_t(
    mu: &DVector<f64>,
    cov: &LowRankCov,
    alpha: &DVector<f64>,
    nu: f64,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let sampler = SkewTFactorSampler::new(mu.clone(), cov.clone(), alpha.clone(), nu)?;
    Ok(sampler.sample(&mut seeded_rng(seed), n))
}
