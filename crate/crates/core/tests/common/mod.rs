#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pmstfa::cli::{ingest_csv, Dataset};
use pmstfa::distributions::{LowRankCov, SkewTFactorSampler};
use std::path::PathBuf;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load_ais() -> Dataset {
    let cols = ["Bfat".to_string(), "BMI".to_string()];
    ingest_csv(&data_path("ais.csv"), Some(&cols), Some("sex")).expect("data/ais.csv")
}

pub fn load_yeast() -> Dataset {
    let cols = ["mcg".to_string(), "alm".to_string(), "vac".to_string()];
    ingest_csv(&data_path("yeast_cyt_me3.csv"), Some(&cols), Some("site")).expect("data/yeast_cyt_me3.csv")
}

/// Known one-component law used by the recovery checks.
pub struct RecoveryTruth {
    pub mu: DVector<f64>,
    pub alpha: DVector<f64>,
    pub nu: f64,
    pub sampler: SkewTFactorSampler,
}

pub fn recovery_truth() -> RecoveryTruth {
    let mu = DVector::from_vec(vec![1.0, -1.0, 0.5]);
    let alpha = DVector::from_vec(vec![1.0, -0.5, 0.5]);
    let nu = 5.0;
    let cov = LowRankCov::new(
        DMatrix::from_column_slice(3, 1, &[0.5, 0.4, -0.3]),
        DVector::from_vec(vec![0.15, 0.1, 0.15]),
    )
    .unwrap();
    let sampler = SkewTFactorSampler::new(mu.clone(), cov, alpha.clone(), nu).unwrap();
    RecoveryTruth { mu, alpha, nu, sampler }
}

/// Largest cell deviation from `expected` over column relabelings of
/// `counts`; `None` when the shapes cannot match.
pub fn table_deviation(counts: &[Vec<usize>], expected: &[[usize; 2]; 2]) -> Option<usize> {
    if counts.len() != 2 || counts.iter().any(|r| r.len() != 2) {
        return None;
    }
    let dev = |perm: [usize; 2]| {
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| counts[i][perm[j]].abs_diff(expected[i][j]))
            .max()
            .unwrap()
    };
    Some(dev([0, 1]).min(dev([1, 0])))
}
