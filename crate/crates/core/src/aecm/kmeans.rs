use crate::distributions::seeded_rng;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;

const LLOYD_MAX_ITER: usize = 300;

fn sq_dist(data: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(j, c)| (data[(i, j)] - c).powi(2))
        .sum()
}

fn plus_plus_seeds<R: Rng>(data: &DMatrix<f64>, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = data.nrows();
    let row = |i: usize| data.row(i).iter().copied().collect::<Vec<f64>>();
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data, i, &c));
        }
        centers.push(c);
    }
    centers
}

/// One Lloyd run; `None` if a cluster empties.
fn lloyd(data: &DMatrix<f64>, mut centers: Vec<Vec<f64>>) -> Option<(Vec<usize>, f64)> {
    let (n, p) = data.shape();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let best = (0..k)
                .map(|c| (c, sq_dist(data, i, &centers[c])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(c, _)| c)
                .unwrap_or(0);
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        for (i, &label) in labels.iter().enumerate() {
            counts[label] += 1;
            for j in 0..p {
                sums[label][j] += data[(i, j)];
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for c in 0..k {
            for j in 0..p {
                centers[c][j] = sums[c][j] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let ss = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(data, i, &centers[c]))
        .sum();
    Some((labels, ss))
}

/// k-means++ seeded Lloyd iterations; the restart with the smallest
/// within-cluster sum of squares wins.
pub fn kmeans(data: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("cannot form {k} clusters from {n} rows")));
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = seeded_rng(seed.wrapping_add(r as u64));
        let centers = plus_plus_seeds(data, k, &mut rng);
        if let Some((labels, ss)) = lloyd(data, centers) {
            if best.as_ref().is_none_or(|b| ss < b.1) {
                best = Some((labels, ss));
            }
        }
    }
    best.map(|b| b.0).ok_or_else(|| {
        Error::Numerical(format!("k-means left a cluster empty in all {} restarts", restarts.max(1)))
    })
}
