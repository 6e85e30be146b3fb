//! Two-cycle AECM fitting for one `(G, q, constraint)` configuration.
//!
//! Each iteration runs an E-step, CM-step 1 (π, μ, α, ν), a refreshing
//! E-step, then CM-step 2 (Λ, Ψ). The log-likelihood is taken from the first
//! E-step of every iteration.

mod init;
mod kmeans;
mod steps;

pub use init::initialize;
pub use kmeans::kmeans;
pub use steps::{
    cm_step_1, cm_step_2, component_aggregates, component_scatter, e_step, nu_solve, ComponentAggregates,
    LatentExpectations, PSI_FLOOR,
};

use crate::error::{Error, Result};
use crate::model::{ConstraintId, MixtureModel};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    pub aitken_tol: f64,
    pub nu_bounds: (f64, f64),
    pub seed: u64,
    pub kmeans_restarts: usize,
    /// `None` means `1.5 (q + 1)`.
    pub min_component_size: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            aitken_tol: 1e-2,
            nu_bounds: (2.0, 200.0),
            seed: 0,
            kmeans_restarts: 10,
            min_component_size: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 3 {
            return Err(Error::Usage(format!("max_iter must be at least 3, got {}", self.max_iter)));
        }
        if !(self.aitken_tol > 0.0) {
            return Err(Error::Usage(format!("aitken_tol must be positive, got {}", self.aitken_tol)));
        }
        let (lo, hi) = self.nu_bounds;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Usage(format!("invalid degrees-of-freedom bounds [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn min_size_for(&self, q: usize) -> f64 {
        self.min_component_size.unwrap_or(1.5 * (q as f64 + 1.0))
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: MixtureModel,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub hard_labels: Vec<usize>,
    pub responsibilities: DMatrix<f64>,
}

impl FitReport {
    /// Largest single-iteration decrease of the log-likelihood (0 if none).
    pub fn max_descent(&self) -> f64 {
        self.loglik_trace
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

/// Aitken stopping rule on the last three log-likelihoods.
pub fn aitken_converged(trace: &[f64], tol: f64) -> bool {
    let k = trace.len();
    if k < 3 {
        return false;
    }
    let (l0, l1, l2) = (trace[k - 3], trace[k - 2], trace[k - 1]);
    let step = l2 - l1;
    let prev = l1 - l0;
    if prev == 0.0 {
        return step == 0.0;
    }
    let a = step / prev;
    if a == 1.0 {
        return false;
    }
    let gap = step / (1.0 - a);
    (0.0..tol).contains(&gap)
}

fn lexicographic(data: &DMatrix<f64>, i: usize, j: usize) -> Ordering {
    data.row(i)
        .iter()
        .zip(data.row(j).iter())
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(i.cmp(&j))
}

fn argmax_row(z: &DMatrix<f64>, i: usize) -> usize {
    (0..z.ncols())
        .max_by(|&a, &b| z[(i, a)].total_cmp(&z[(i, b)]).then(b.cmp(&a)))
        .unwrap_or(0)
}

/// Fit one configuration.
///
/// Rows are processed in lexicographic order, so the result does not depend on
/// the order they are supplied in; labels and responsibilities are reported
/// in input order.
pub fn fit(
    data: &DMatrix<f64>,
    g: usize,
    q: usize,
    constraint: ConstraintId,
    config: &FitConfig,
) -> Result<FitReport> {
    config.validate()?;
    let (n, p) = data.shape();
    if let Some((i, j)) = (0..n)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .find(|&(i, j)| !data[(i, j)].is_finite())
    {
        return Err(Error::Data(format!("non-finite value at row {i}, column {j}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lexicographic(data, i, j));
    let sorted = DMatrix::from_fn(n, p, |i, j| data[(order[i], j)]);

    let min_size = config.min_size_for(q);
    let mut model = initialize(&sorted, g, q, constraint, config)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last = None;
    while iterations < config.max_iter {
        let exp = e_step(&sorted, &model)?;
        trace.push(exp.loglik);
        if aitken_converged(&trace, config.aitken_tol) {
            converged = true;
            last = Some(exp);
            break;
        }
        iterations += 1;
        let stage1 = cm_step_1(&sorted, &exp, &model, min_size, config.nu_bounds)?;
        let refreshed = steps::e_step_with(&sorted, &stage1, false)?;
        let aggregates: Vec<ComponentAggregates> = stage1
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| component_aggregates(&sorted, &refreshed, k, &c.mu, &c.alpha))
            .collect();
        model = cm_step_2(&aggregates, &stage1)?;
    }
    let exp = match last {
        Some(e) => e,
        None => {
            let e = e_step(&sorted, &model)?;
            trace.push(e.loglik);
            e
        }
    };
    model.loglik = exp.loglik;
    let rho = model.rho()?;
    model.bic = crate::selection::bic(exp.loglik, rho, n);

    let mut hard_labels = vec![0; n];
    let mut responsibilities = DMatrix::zeros(n, g);
    for (k, &orig) in order.iter().enumerate() {
        hard_labels[orig] = argmax_row(&exp.z, k);
        for c in 0..g {
            responsibilities[(orig, c)] = exp.z[(k, c)];
        }
    }
    Ok(FitReport {
        model,
        loglik_trace: trace,
        iterations,
        converged,
        hard_labels,
        responsibilities,
    })
}

#[cfg(test)]
mod tests;
