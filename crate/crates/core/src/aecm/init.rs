use super::kmeans::kmeans;
use super::steps::PSI_FLOOR;
use super::FitConfig;
use crate::error::{Error, Result};
use crate::model::{ComponentParams, ConstraintId, MixtureModel};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const INITIAL_NU: f64 = 50.0;
const INITIAL_SKEWNESS: f64 = 0.01;

/// Leading `q` eigenvectors scaled by root eigenvalues, each column signed so
/// that its largest-magnitude entry is positive.
fn principal_loadings(s: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DMatrix::zeros(s.nrows(), q);
    for (k, &idx) in order.iter().take(q).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let pivot = v.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = eig.eigenvalues[idx].max(0.0).sqrt() * sign;
        out.set_column(k, &(v * scale));
    }
    out
}

fn residual_diag(s: &DMatrix<f64>, loadings: &DMatrix<f64>) -> DVector<f64> {
    let ll = loadings * loadings.transpose();
    DVector::from_fn(s.nrows(), |j, _| (s[(j, j)] - ll[(j, j)]).max(PSI_FLOOR))
}

/// Starting values from k-means hard labels.
pub fn initialize(
    data: &DMatrix<f64>,
    g: usize,
    q: usize,
    constraint: ConstraintId,
    config: &FitConfig,
) -> Result<MixtureModel> {
    let (n, p) = data.shape();
    if g == 0 || q == 0 || q >= p {
        return Err(Error::Domain(format!("need G >= 1 and 1 <= q < p, got G = {g}, q = {q}, p = {p}")));
    }
    if n <= g * (q + 1) {
        return Err(Error::Domain(format!("n = {n} rows is too few for G = {g}, q = {q}")));
    }
    let labels = kmeans(data, g, config.kmeans_restarts, config.seed)?;
    let mut counts = vec![0usize; g];
    let mut means = vec![DVector::<f64>::zeros(p); g];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        means[l] += data.row(i).transpose();
    }
    for k in 0..g {
        means[k] /= counts[k] as f64;
    }
    let mut scatters = vec![DMatrix::<f64>::zeros(p, p); g];
    for (i, &l) in labels.iter().enumerate() {
        let d = data.row(i).transpose() - &means[l];
        scatters[l] += &d * d.transpose();
    }
    for k in 0..g {
        scatters[k] /= counts[k] as f64;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

    // Ψ comes from each component's own loadings; ties are applied after.
    let mut loadings: Vec<DMatrix<f64>> = scatters.iter().map(|s| principal_loadings(s, q)).collect();
    let mut psi: Vec<DVector<f64>> = (0..g).map(|k| residual_diag(&scatters[k], &loadings[k])).collect();
    if constraint.loading_constrained {
        let mut shared = DMatrix::zeros(p, q);
        for k in 0..g {
            shared += &loadings[k] * weights[k];
        }
        loadings = vec![shared; g];
    }
    if constraint.error_constrained {
        let mut shared = DVector::zeros(p);
        for k in 0..g {
            shared += &psi[k] * weights[k];
        }
        psi = vec![shared; g];
    }
    if constraint.isotropic {
        for v in &mut psi {
            *v = DVector::from_element(p, v.mean());
        }
    }

    let components = (0..g)
        .map(|k| ComponentParams {
            pi: weights[k],
            mu: means[k].clone(),
            loadings: loadings[k].clone(),
            psi_diag: psi[k].clone(),
            alpha: DVector::from_element(p, INITIAL_SKEWNESS),
            nu: INITIAL_NU,
        })
        .collect();
    Ok(MixtureModel {
        g,
        q,
        constraint,
        components,
        loglik: f64::NEG_INFINITY,
        bic: f64::NEG_INFINITY,
    })
}
