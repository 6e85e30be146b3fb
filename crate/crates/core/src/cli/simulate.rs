use super::io::Dataset;
use crate::distributions::{seeded_rng, LowRankCov, SkewTFactorSampler};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// One generating component; `loadings` is row-major p×q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimComponent {
    pub n: usize,
    pub mu: Vec<f64>,
    pub loadings: Vec<f64>,
    pub psi_diag: Vec<f64>,
    pub alpha: Vec<f64>,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub seed: u64,
    pub q: usize,
    pub components: Vec<SimComponent>,
}

/// Two well separated, strongly skewed components in 13 dimensions with
/// thirty draws each.
pub fn sim13_preset() -> SimulationSpec {
    let p = 13;
    let loadings: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { 2.0 } else { -2.0 }).collect();
    let component = |mu: f64| SimComponent {
        n: 30,
        mu: vec![mu; p],
        loadings: loadings.clone(),
        psi_diag: vec![1.0; p],
        alpha: vec![30.0; p],
        nu: 100.0,
    };
    SimulationSpec {
        seed: 13,
        q: 1,
        components: vec![component(0.0), component(40.0)],
    }
}

/// Draw the sample; labels are 1-based component indices in draw order.
pub fn simulate(spec: &SimulationSpec) -> Result<(Dataset, Vec<usize>)> {
    let first = spec
        .components
        .first()
        .ok_or_else(|| Error::Data("simulation needs at least one component".into()))?;
    let p = first.mu.len();
    let q = spec.q;
    if p == 0 {
        return Err(Error::Data("simulation dimension is zero".into()));
    }
    let mut rng = seeded_rng(spec.seed);
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in spec.components.iter().enumerate() {
        if c.mu.len() != p || c.alpha.len() != p || c.psi_diag.len() != p || c.loadings.len() != p * q {
            return Err(Error::Data(format!(
                "component {} has inconsistent dimensions (p = {p}, q = {q})",
                k + 1
            )));
        }
        if c.n == 0 {
            return Err(Error::Data(format!("component {} has n = 0", k + 1)));
        }
        let cov = LowRankCov::new(DMatrix::from_row_slice(p, q, &c.loadings), DVector::from_vec(c.psi_diag.clone()))
            .map_err(|e| Error::Data(format!("component {}: {e}", k + 1)))?;
        let sampler =
            SkewTFactorSampler::new(DVector::from_vec(c.mu.clone()), cov, DVector::from_vec(c.alpha.clone()), c.nu)
                .map_err(|e| Error::Data(format!("component {}: {e}", k + 1)))?;
        blocks.push(sampler.sample(&mut rng, c.n));
        labels.extend(std::iter::repeat_n(k + 1, c.n));
    }
    let n = labels.len();
    let mut values = DMatrix::zeros(n, p);
    let mut row = 0;
    for b in &blocks {
        values.rows_mut(row, b.nrows()).copy_from(b);
        row += b.nrows();
    }
    let column_names = (1..=p).map(|j| format!("x{j}")).collect();
    Ok((
        Dataset {
            values,
            column_names,
            labels: None,
        },
        labels,
    ))
}
