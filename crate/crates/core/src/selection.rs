//! Grid search over `(G, q, constraint)`, BIC ranking and partition agreement.

use crate::aecm::{fit, FitConfig, FitReport};
use crate::error::{Error, Result};
use crate::model::{count_free_params, ConstraintId};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `2 l − ρ log n`; larger is better.
pub fn bic(loglik: f64, rho: usize, n: usize) -> f64 {
    2.0 * loglik - rho as f64 * (n as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub g_values: Vec<usize>,
    pub q_values: Vec<usize>,
    pub constraints: Vec<ConstraintId>,
    pub config: FitConfig,
}

impl GridSpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.g_values.is_empty() || self.q_values.is_empty() || self.constraints.is_empty() {
            return Err(Error::Usage("grid needs at least one G, one q and one model".into()));
        }
        if self.g_values.contains(&0) || self.q_values.contains(&0) {
            return Err(Error::Usage("G and q must be at least 1".into()));
        }
        let q_max = *self.q_values.iter().max().unwrap_or(&0);
        if q_max >= p {
            return Err(Error::Usage(format!("q = {q_max} must be below the dimension p = {p}")));
        }
        self.config.validate()
    }

    fn triples(&self) -> Vec<(usize, usize, ConstraintId)> {
        let mut out = Vec::new();
        for &g in &self.g_values {
            for &q in &self.q_values {
                for &c in &self.constraints {
                    out.push((g, q, c));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone)]
pub struct GridEntry {
    pub g: usize,
    pub q: usize,
    pub constraint: ConstraintId,
    pub rho: usize,
    pub bic: Option<f64>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub failure: Option<String>,
    pub report: Option<FitReport>,
}

impl GridEntry {
    /// Whether the entry may be selected: a fit that either met the stopping
    /// rule or still has an ascending trace.
    pub fn eligible(&self) -> bool {
        match &self.report {
            Some(r) => r.model.bic.is_finite() && (r.converged || r.max_descent() <= 1e-8),
            None => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    pub best: usize,
}

impl GridResult {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }

    pub fn best_report(&self) -> &FitReport {
        self.entries[self.best].report.as_ref().expect("best entry always has a report")
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one grid cell; stable across platforms and releases.
pub fn fit_seed(seed: u64, g: usize, q: usize, constraint: ConstraintId) -> u64 {
    [g as u64, q as u64, constraint.index() as u64]
        .iter()
        .fold(splitmix64(seed), |h, &v| splitmix64(h ^ v))
}

fn run_one(data: &DMatrix<f64>, spec: &GridSpec, g: usize, q: usize, constraint: ConstraintId) -> GridEntry {
    let p = data.ncols();
    let rho = count_free_params(constraint, p, q, g).map(|c| c.total_rho).unwrap_or(0);
    let config = FitConfig {
        seed: fit_seed(spec.config.seed, g, q, constraint),
        ..spec.config.clone()
    };
    match fit(data, g, q, constraint, &config) {
        Ok(report) => GridEntry {
            g,
            q,
            constraint,
            rho,
            bic: Some(report.model.bic),
            loglik: Some(report.model.loglik),
            converged: report.converged,
            failure: None,
            report: Some(report),
        },
        Err(e) => GridEntry {
            g,
            q,
            constraint,
            rho,
            bic: None,
            loglik: None,
            converged: false,
            failure: Some(e.to_string()),
            report: None,
        },
    }
}

/// Index of the best eligible entry. BIC ties within `1e-9` go to the smaller
/// `ρ`, then smaller `G`, then smaller `q`.
fn select_best(entries: &[GridEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        if !e.eligible() {
            continue;
        }
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let cur = &entries[b];
        let (eb, cb) = (e.bic.unwrap(), cur.bic.unwrap());
        let better = if (eb - cb).abs() <= 1e-9 {
            (e.rho, e.g, e.q) < (cur.rho, cur.g, cur.q)
        } else {
            eb > cb
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Fit every triple of the grid in parallel.
pub fn grid_search(data: &DMatrix<f64>, spec: &GridSpec) -> Result<GridResult> {
    spec.validate(data.ncols())?;
    let entries: Vec<GridEntry> = spec
        .triples()
        .into_par_iter()
        .map(|(g, q, c)| run_one(data, spec, g, q, c))
        .collect();
    match select_best(&entries) {
        Some(best) => Ok(GridResult { entries, best }),
        None => {
            let reasons: Vec<String> = entries
                .iter()
                .take(5)
                .map(|e| format!("G={} q={} {}: {}", e.g, e.q, e.constraint, e.failure.as_deref().unwrap_or("not eligible")))
                .collect();
            Err(Error::Numerical(format!("every fit in the grid failed ({})", reasons.join("; "))))
        }
    }
}

/// Contingency counts; rows follow sorted distinct `true_labels`, columns
/// sorted distinct `predicted_labels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable<A, B> {
    pub row_labels: Vec<A>,
    pub col_labels: Vec<B>,
    pub counts: Vec<Vec<usize>>,
}

pub fn confusion_table<A: Ord + Clone, B: Ord + Clone>(
    true_labels: &[A],
    predicted_labels: &[B],
) -> Result<ConfusionTable<A, B>> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::Domain(format!(
            "label vectors differ in length ({} vs {})",
            true_labels.len(),
            predicted_labels.len()
        )));
    }
    let rows: BTreeMap<A, usize> = index_of(true_labels);
    let cols: BTreeMap<B, usize> = index_of(predicted_labels);
    let mut counts = vec![vec![0; cols.len()]; rows.len()];
    for (a, b) in true_labels.iter().zip(predicted_labels) {
        counts[rows[a]][cols[b]] += 1;
    }
    Ok(ConfusionTable {
        row_labels: rows.into_keys().collect(),
        col_labels: cols.into_keys().collect(),
        counts,
    })
}

fn index_of<T: Ord + Clone>(labels: &[T]) -> BTreeMap<T, usize> {
    let mut map: BTreeMap<T, usize> = labels.iter().cloned().map(|l| (l, 0)).collect();
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    map
}

fn choose2(k: usize) -> f64 {
    let k = k as f64;
    0.5 * k * (k - 1.0)
}

/// Hubert–Arabie adjusted Rand index of a contingency table.
pub fn ari_from_counts(counts: &[Vec<usize>]) -> f64 {
    let n: usize = counts.iter().flatten().sum();
    let cols = counts.iter().map(|r| r.len()).max().unwrap_or(0);
    let sum_cells: f64 = counts.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = counts.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..cols)
        .map(|j| choose2(counts.iter().map(|r| r.get(j).copied().unwrap_or(0)).sum()))
        .sum();
    let total = choose2(n);
    let expected = if total > 0.0 { sum_rows * sum_cols / total } else { 0.0 };
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // Both partitions trivial in the same way (one block each, or all
        // singletons): they agree exactly.
        return if sum_rows == sum_cols { 1.0 } else { 0.0 };
    }
    (sum_cells - expected) / denom
}

pub fn adjusted_rand_index<A: Ord + Clone, B: Ord + Clone>(labels_a: &[A], labels_b: &[B]) -> Result<f64> {
    Ok(ari_from_counts(&confusion_table(labels_a, labels_b)?.counts))
}
