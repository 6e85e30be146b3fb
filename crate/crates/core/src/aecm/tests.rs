use super::steps::shared_loadings;
use super::*;
use crate::distributions::{sample_skew_t, seeded_rng, LowRankCov};
use crate::model::ComponentParams;
use crate::specfun::digamma;
use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn comp(pi: f64, mu: &[f64], lam: &[f64], psi: &[f64], alpha: &[f64], nu: f64) -> ComponentParams {
    let p = mu.len();
    ComponentParams {
        pi,
        mu: DVector::from_row_slice(mu),
        loadings: DMatrix::from_row_slice(p, lam.len() / p, lam),
        psi_diag: DVector::from_row_slice(psi),
        alpha: DVector::from_row_slice(alpha),
        nu,
    }
}

fn mixture(constraint: ConstraintId, q: usize, components: Vec<ComponentParams>) -> MixtureModel {
    MixtureModel {
        g: components.len(),
        q,
        constraint,
        components,
        loglik: 0.0,
        bic: 0.0,
    }
}

fn latent(z: &[f64], a: &[f64], b: &[f64]) -> LatentExpectations {
    let n = a.len();
    let g = z.len() / n;
    LatentExpectations {
        z: DMatrix::from_row_slice(n, g, z),
        a: DMatrix::from_fn(n, g, |i, _| a[i]),
        b: DMatrix::from_fn(n, g, |i, _| b[i]),
        c: DMatrix::zeros(n, g),
        loglik: 0.0,
    }
}

fn two_blobs(seed: u64, n_each: usize) -> DMatrix<f64> {
    let cov = LowRankCov::new(DMatrix::from_row_slice(3, 1, &[1.0, 0.6, -0.4]), DVector::from_element(3, 0.4)).unwrap();
    let a = sample_skew_t(
        &DVector::from_vec(vec![0.0, 0.0, 0.0]),
        &cov,
        &DVector::from_vec(vec![1.0, 0.5, 0.0]),
        8.0,
        n_each,
        seed,
    )
    .unwrap();
    let b = sample_skew_t(
        &DVector::from_vec(vec![8.0, -6.0, 5.0]),
        &cov,
        &DVector::from_vec(vec![-0.5, 0.0, 1.0]),
        12.0,
        n_each,
        seed + 1,
    )
    .unwrap();
    let mut out = DMatrix::zeros(2 * n_each, 3);
    out.rows_mut(0, n_each).copy_from(&a);
    out.rows_mut(n_each, n_each).copy_from(&b);
    out
}

#[test]
fn e_step_single_component() {
    let data = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.5, -3.0, 2.0]);
    let m = mixture(ConstraintId::UUU, 1, vec![comp(1.0, &[0.0, 0.0], &[1.0, 0.5], &[1.0, 2.0], &[0.3, -0.2], 6.0)]);
    let e = e_step(&data, &m).unwrap();
    assert!(e.z.iter().all(|&v| v == 1.0));
    for i in 0..4 {
        assert!(e.a[(i, 0)] > 0.0 && e.b[(i, 0)] > 0.0);
        assert!(e.a[(i, 0)] * e.b[(i, 0)] >= 1.0);
    }
    let direct: f64 = (0..4)
        .map(|i| crate::model::mixture_log_density(&data.row(i).transpose(), &m).unwrap())
        .sum();
    assert_relative_eq!(e.loglik, direct, epsilon = 1e-10);
}

#[test]
fn e_step_identical_components_split_evenly() {
    let data = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.5]);
    let c = comp(0.5, &[0.0, 0.0], &[1.0, 0.5], &[1.0, 2.0], &[0.3, -0.2], 6.0);
    let m = mixture(ConstraintId::CCU, 1, vec![c.clone(), c]);
    let e = e_step(&data, &m).unwrap();
    assert!(e.z.iter().all(|&v| (v - 0.5).abs() < 1e-15));
}

#[test]
fn e_step_matches_bayes_rule_in_one_dimension() {
    let data = DMatrix::from_row_slice(5, 1, &[-2.0, -0.5, 0.3, 1.7, 4.0]);
    let c1 = comp(0.3, &[-1.0], &[], &[1.0], &[0.5], 5.0);
    let c2 = comp(0.7, &[2.0], &[], &[0.6], &[-0.4], 9.0);
    let mut m = mixture(ConstraintId::UUU, 0, vec![c1.clone(), c2.clone()]);
    m.q = 0;
    let e = e_step(&data, &m).unwrap();
    for i in 0..5 {
        let x = data.row(i).transpose();
        let f1 = c1.pi * c1.law().unwrap().ln_pdf(&x).unwrap().exp();
        let f2 = c2.pi * c2.law().unwrap().ln_pdf(&x).unwrap().exp();
        assert_relative_eq!(e.z[(i, 0)], f1 / (f1 + f2), epsilon = 1e-12);
        assert_relative_eq!(e.z[(i, 0)] + e.z[(i, 1)], 1.0, epsilon = 1e-12);
    }
}

#[test]
fn responsibilities_invariant_under_common_rescaling() {
    // Scaling data and parameters by s multiplies every component density by
    // the same factor s^{-p}.
    let data = two_blobs(3, 20);
    let comps = vec![
        comp(0.4, &[0.0, 0.0, 0.0], &[1.0, 0.5, 0.2], &[0.5, 0.4, 0.3], &[0.5, 0.1, 0.0], 7.0),
        comp(0.6, &[8.0, -6.0, 5.0], &[0.3, 0.1, 0.9], &[0.6, 0.5, 0.7], &[0.0, 0.2, 0.4], 15.0),
    ];
    let m = mixture(ConstraintId::UUU, 1, comps);
    let s = 3.5;
    let mut scaled = m.clone();
    for c in &mut scaled.components {
        c.mu *= s;
        c.loadings *= s;
        c.psi_diag *= s * s;
        c.alpha *= s;
    }
    let e1 = e_step(&data, &m).unwrap();
    let e2 = e_step(&(&data * s), &scaled).unwrap();
    assert_relative_eq!(e1.z, e2.z, epsilon = 1e-10);
    assert_relative_eq!(e2.loglik, e1.loglik - data.len() as f64 * s.ln(), epsilon = 1e-8);
}

#[test]
fn cm_step_1_hand_case() {
    let data = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let exp = latent(&[1.0, 1.0], &[1.0, 2.0], &[1.0, 0.8]);
    let m = mixture(ConstraintId::UUU, 0, vec![comp(1.0, &[0.0], &[], &[1.0], &[0.1], 10.0)]);
    let out = cm_step_1(&data, &exp, &m, 0.5, (2.0, 200.0)).unwrap();
    let c = &out.components[0];
    assert_relative_eq!(c.pi, 1.0);
    assert_relative_eq!(c.mu[0], 0.2 / 0.7, epsilon = 1e-14);
    // The stationarity condition gives the (b̄ − b) orientation.
    assert_relative_eq!(c.alpha[0], 0.1 / 0.7, epsilon = 1e-14);
    // Same point from the α-equation α = (x̄ − μ)/ā.
    assert_relative_eq!(c.alpha[0], (0.5 - c.mu[0]) / 1.5, epsilon = 1e-14);
    let agg = component_aggregates(&data, &exp, 0, &c.mu, &c.alpha);
    assert_relative_eq!(agg.n_g, 2.0);
    assert_relative_eq!(agg.a_bar, 1.5);
    assert_relative_eq!(agg.b_bar, 0.9);
    assert_relative_eq!(agg.m_g, 0.7, epsilon = 1e-14);
}

#[test]
fn cm_step_1_symmetric_data_has_no_skewness() {
    let data = DMatrix::from_row_slice(4, 2, &[-2.0, 1.0, -1.0, -3.0, 1.0, 3.0, 2.0, -1.0]);
    let exp = latent(&[1.0; 4], &[2.0, 1.0, 1.0, 2.0], &[0.7, 1.3, 1.3, 0.7]);
    let m = mixture(ConstraintId::UUU, 1, vec![comp(1.0, &[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.1, 0.1], 10.0)]);
    let out = cm_step_1(&data, &exp, &m, 0.5, (2.0, 200.0)).unwrap();
    assert!(out.components[0].alpha.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn cm_step_1_mixing_proportions_and_errors() {
    let data = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 5.0]);
    let z = [0.9, 0.1, 0.7, 0.3, 0.2, 0.8, 0.4, 0.6];
    let mut exp = latent(&z, &[1.2, 1.5, 2.0, 1.1], &[1.0, 0.8, 0.6, 1.2]);
    let c = comp(0.5, &[0.0], &[], &[1.0], &[0.1], 10.0);
    let m = mixture(ConstraintId::UUU, 0, vec![c.clone(), c]);
    let out = cm_step_1(&data, &exp, &m, 0.5, (2.0, 200.0)).unwrap();
    assert_relative_eq!(out.components[0].pi, 2.2 / 4.0, epsilon = 1e-14);
    assert_relative_eq!(out.components[1].pi, 1.8 / 4.0, epsilon = 1e-14);

    assert!(matches!(
        cm_step_1(&data, &exp, &m, 2.0, (2.0, 200.0)),
        Err(Error::ComponentCollapse { component: 1, .. })
    ));
    exp.a.fill(1.0);
    exp.b.fill(1.0);
    assert!(matches!(
        cm_step_1(&data, &exp, &m, 0.5, (2.0, 200.0)),
        Err(Error::DegenerateComponent { component: 0, .. })
    ));
}

#[test]
fn nu_solve_inverts_forward_evaluation() {
    let t = 25.0_f64.ln() + 1.0 - digamma(25.0).unwrap();
    assert!((nu_solve(t, (2.0, 200.0)).unwrap() - 50.0).abs() < 1e-6);
    for nu in [2.5_f64, 7.0, 33.3, 150.0] {
        let t = (0.5 * nu).ln() + 1.0 - digamma(0.5 * nu).unwrap();
        assert!((nu_solve(t, (2.0, 200.0)).unwrap() - nu).abs() < 1e-6 * nu);
    }
}

#[test]
fn nu_solve_clamps() {
    let f2 = 1.0_f64.ln() + 1.0 - digamma(1.0).unwrap();
    assert_eq!(nu_solve(f2 + 0.1, (2.0, 200.0)).unwrap(), 2.0);
    assert_eq!(nu_solve(-1.0, (2.0, 200.0)).unwrap(), 200.0);
    assert!(nu_solve(f64::NAN, (2.0, 200.0)).is_err());
    assert!(nu_solve(1.0, (5.0, 3.0)).is_err());
}

#[test]
fn nu_equation_is_decreasing() {
    let f = |nu: f64| (0.5 * nu).ln() + 1.0 - digamma(0.5 * nu).unwrap();
    let grid: Vec<f64> = (0..=400).map(|k| 2.0 + k as f64 * 198.0 / 400.0).collect();
    assert!(grid.windows(2).all(|w| f(w[1]) < f(w[0])));
}

#[test]
fn scatter_reduces_to_sample_covariance() {
    let data = DMatrix::from_row_slice(5, 2, &[1.0, 2.0, 2.0, 1.0, 0.0, -1.0, 4.0, 3.0, 3.0, 0.5]);
    let labels = [1.0, 1.0, 0.0, 1.0, 0.0];
    let z: Vec<f64> = labels.iter().flat_map(|&l| [l, 1.0 - l]).collect();
    let exp = latent(&z, &[1.0; 5], &[1.0; 5]);
    let rows = [0usize, 1, 3];
    let mean = rows.iter().fold(DVector::zeros(2), |acc, &i| acc + data.row(i).transpose()) / 3.0;
    let mut cov = DMatrix::zeros(2, 2);
    for &i in &rows {
        let d = data.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    cov /= 3.0;
    let s = component_scatter(&data, &exp, 0, &mean, &DVector::zeros(2));
    assert_relative_eq!(s, cov, epsilon = 1e-13);
}

#[test]
fn scatter_is_symmetric_and_matches_hand_case() {
    let data = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let exp = latent(&[1.0, 1.0], &[1.0, 2.0], &[1.0, 0.8]);
    let mu = 0.2 / 0.7;
    let alpha = 0.1 / 0.7;
    let s = component_scatter(&data, &exp, 0, &DVector::from_element(1, mu), &DVector::from_element(1, alpha));
    let hand = 0.5 * (1.0 * mu * mu + 0.8 * (1.0 - mu) * (1.0 - mu)) - 2.0 * alpha * (0.5 - mu) + 1.5 * alpha * alpha;
    assert_relative_eq!(s[(0, 0)], hand, epsilon = 1e-14);

    let data = two_blobs(9, 15);
    let n = data.nrows();
    let a: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i % 7) as f64).collect();
    let b: Vec<f64> = (0..n).map(|i| 1.0 / a[i] + 0.05 * (i % 3) as f64).collect();
    let exp = latent(&vec![1.0; n], &a, &b);
    let s = component_scatter(&data, &exp, 0, &DVector::from_vec(vec![0.3, -0.2, 1.0]), &DVector::from_vec(vec![0.4, 0.9, -0.3]));
    assert_eq!(s, s.transpose());
}

fn aggregate(n_g: f64, scatter: DMatrix<f64>) -> ComponentAggregates {
    let p = scatter.nrows();
    ComponentAggregates {
        n_g,
        a_bar: 1.0,
        b_bar: 1.0,
        m_g: 1.0,
        x_bar: DVector::zeros(p),
        scatter,
    }
}

#[test]
fn cm_step_2_keeps_axis_aligned_loadings() {
    let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.5, 0.7]));
    let mut m = mixture(ConstraintId::UUU, 1, vec![comp(1.0, &[0.0; 3], &[1.0, 0.0, 0.0], &[1.0; 3], &[0.1; 3], 10.0)]);
    for _ in 0..20 {
        m = cm_step_2(&[aggregate(50.0, s.clone())], &m).unwrap();
        let l = &m.components[0].loadings;
        assert!(l[(0, 0)] > 0.0);
        assert_eq!((l[(1, 0)], l[(2, 0)]), (0.0, 0.0));
    }
}

#[test]
fn cm_step_2_reaches_gaussian_mle_when_saturated() {
    // p = 3, q = 1 has as many covariance parameters as a dense matrix, so
    // iterating CM-step 2 with unit weights converges to the sample covariance.
    let (n, p) = (400, 3);
    let lam = DVector::from_vec(vec![1.2, 0.8, -0.9]);
    let psi = DVector::from_vec(vec![0.5_f64, 0.3, 0.4]);
    let mut rng = seeded_rng(21);
    let mut data = DMatrix::zeros(n, p);
    for i in 0..n {
        let u: f64 = StandardNormal.sample(&mut rng);
        for j in 0..p {
            let e: f64 = StandardNormal.sample(&mut rng);
            data[(i, j)] = lam[j] * u + psi[j].sqrt() * e;
        }
    }
    let mean = data.row_mean().transpose();
    let mut s = DMatrix::zeros(p, p);
    for i in 0..n {
        let d = data.row(i).transpose() - &mean;
        s += &d * d.transpose();
    }
    s /= n as f64;
    let gaussian_loglik = |sigma: &DMatrix<f64>| {
        let chol = sigma.clone().cholesky().unwrap();
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let inv = chol.inverse();
        let trace = (&inv * &s).trace();
        -0.5 * n as f64 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + trace)
    };
    let mut m = mixture(ConstraintId::UUU, 1, vec![comp(1.0, &[0.0; 3], &[1.0, 1.0, 1.0], &[1.0; 3], &[0.1; 3], 10.0)]);
    for _ in 0..2000 {
        m = cm_step_2(&[aggregate(n as f64, s.clone())], &m).unwrap();
    }
    let fitted = crate::model::assemble_covariance(&m.components[0]).unwrap().dense();
    assert!((gaussian_loglik(&fitted) - gaussian_loglik(&s)).abs() < 1e-3);
}

#[test]
fn shared_loading_solution_has_small_residual() {
    let (p, q) = (5, 2);
    let mut rng = seeded_rng(5);
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let s_beta: Vec<DMatrix<f64>> = (0..3).map(|_| draw(p, q)).collect();
    let theta: Vec<DMatrix<f64>> = (0..3)
        .map(|_| {
            let a = draw(q, q);
            &a * a.transpose() + DMatrix::identity(q, q)
        })
        .collect();
    let psi: Vec<DVector<f64>> = (0..3).map(|_| draw(p, 1).column(0).map(|v| 0.2 + v * v)).collect();
    let weights = [10.0, 25.0, 7.5];
    let lam = shared_loadings(&weights, &psi, &s_beta, &theta).unwrap();
    let mut lhs = DMatrix::zeros(p, q);
    let mut rhs = DMatrix::zeros(p, q);
    for g in 0..3 {
        let w = DMatrix::from_diagonal(&psi[g].map(|v| weights[g] / v));
        lhs += &w * &lam * &theta[g];
        rhs += &w * &s_beta[g];
    }
    assert!((lhs - rhs).amax() <= 1e-8);

    // Common Ψ collapses to (Σ n_g S_g β_g')(Σ n_g Θ_g)⁻¹.
    let common = vec![psi[0].clone(); 3];
    let lam = shared_loadings(&weights, &common, &s_beta, &theta).unwrap();
    let mut num = DMatrix::zeros(p, q);
    let mut den = DMatrix::zeros(q, q);
    for g in 0..3 {
        num += &s_beta[g] * weights[g];
        den += &theta[g] * weights[g];
    }
    assert_relative_eq!(lam, num * den.try_inverse().unwrap(), epsilon = 1e-10);
}

#[test]
fn every_constraint_survives_both_cycles() {
    let data = two_blobs(4, 40);
    let config = FitConfig::default();
    for c in ConstraintId::ALL {
        let m = initialize(&data, 2, 1, c, &config).unwrap();
        m.validate().unwrap();
        let e = e_step(&data, &m).unwrap();
        let m1 = cm_step_1(&data, &e, &m, 3.0, config.nu_bounds).unwrap();
        let e1 = e_step(&data, &m1).unwrap();
        let aggs: Vec<_> = m1
            .components
            .iter()
            .enumerate()
            .map(|(k, comp)| component_aggregates(&data, &e1, k, &comp.mu, &comp.alpha))
            .collect();
        let m2 = cm_step_2(&aggs, &m1).unwrap();
        m2.validate().unwrap();
        assert!(m2.components.iter().all(|comp| comp.psi_diag.iter().all(|&v| v >= PSI_FLOOR)));
        let e2 = e_step(&data, &m2).unwrap();
        assert!(e2.loglik >= e.loglik - 1e-8, "{c}: {} -> {}", e.loglik, e2.loglik);
    }
}

#[test]
fn initialization_contract() {
    let data = two_blobs(2, 30);
    let config = FitConfig::default();
    let one = initialize(&data, 1, 1, ConstraintId::UUU, &config).unwrap();
    assert_relative_eq!(one.components[0].mu, data.row_mean().transpose(), epsilon = 1e-12);
    for c in ConstraintId::ALL {
        let m = initialize(&data, 2, 2, c, &config).unwrap();
        m.validate().unwrap();
        for comp in &m.components {
            assert_eq!(comp.nu, 50.0);
            assert!(comp.psi_diag.iter().all(|&v| v >= PSI_FLOOR));
            assert!(comp.alpha.iter().all(|&v| v == 0.01));
        }
    }
    let tiny = data.rows(0, 4).into_owned();
    assert!(initialize(&tiny, 2, 1, ConstraintId::UUU, &config).is_err());
    assert!(initialize(&data, 1, 3, ConstraintId::UUU, &config).is_err());
}

#[test]
fn aitken_rule() {
    assert!(!aitken_converged(&[1.0, 2.0], 1e-2));
    // Geometric approach with ratio 1/2: the limit is 1 step ahead.
    assert!(!aitken_converged(&[-10.0, -9.0, -8.5], 1e-2));
    assert!(aitken_converged(&[-10.0, -9.99, -9.986], 1e-2));
    assert!(!aitken_converged(&[-10.0, -9.99, -9.995], 1e-2));
    assert!(aitken_converged(&[3.0, 3.0, 3.0], 1e-2));
    // Accelerating increments never stop the loop.
    assert!(!aitken_converged(&[0.0, 0.001, 0.003], 1e-2));
}

#[test]
fn fit_ascends_and_recovers_groups() {
    let data = two_blobs(11, 60);
    let config = FitConfig::default();
    let r = fit(&data, 2, 1, ConstraintId::UUU, &config).unwrap();
    assert!(r.max_descent() <= 1e-8, "descent {}", r.max_descent());
    let truth: Vec<usize> = (0..120).map(|i| i / 60).collect();
    assert_eq!(crate::selection::adjusted_rand_index(&truth, &r.hard_labels).unwrap(), 1.0);
    for i in 0..120 {
        assert_relative_eq!(r.responsibilities.row(i).sum(), 1.0, epsilon = 1e-12);
        assert_eq!(r.hard_labels[i], if r.responsibilities[(i, 0)] >= r.responsibilities[(i, 1)] { 0 } else { 1 });
    }
    assert_eq!(r.loglik_trace.last().copied(), Some(r.model.loglik));
    assert!(r.model.components.iter().all(|c| (2.0..=200.0).contains(&c.nu)));
}

#[test]
fn fit_is_row_exchangeable() {
    let data = two_blobs(12, 30);
    let n = data.nrows();
    let perm: Vec<usize> = (0..n).map(|i| (i * 17 + 5) % n).collect();
    let shuffled = DMatrix::from_fn(n, 3, |i, j| data[(perm[i], j)]);
    let config = FitConfig {
        max_iter: 200,
        ..FitConfig::default()
    };
    let a = fit(&data, 2, 1, ConstraintId::CUU, &config).unwrap();
    let b = fit(&shuffled, 2, 1, ConstraintId::CUU, &config).unwrap();
    assert_eq!(a.model.loglik, b.model.loglik);
    for i in 0..n {
        assert_eq!(b.hard_labels[i], a.hard_labels[perm[i]]);
    }
}

#[test]
fn fit_is_translation_invariant() {
    let data = two_blobs(13, 40);
    let shift = DVector::from_vec(vec![100.0, -50.0, 3.0]);
    let mut moved = data.clone();
    for mut row in moved.row_iter_mut() {
        row += shift.transpose();
    }
    let config = FitConfig::default();
    let a = fit(&data, 2, 1, ConstraintId::CCC, &config).unwrap();
    let b = fit(&moved, 2, 1, ConstraintId::CCC, &config).unwrap();
    assert!((a.model.loglik - b.model.loglik).abs() < 1e-6, "{} vs {}", a.model.loglik, b.model.loglik);
}

#[test]
fn fit_rejects_bad_input() {
    let mut data = two_blobs(1, 10);
    let config = FitConfig::default();
    assert!(fit(&data, 1, 1, ConstraintId::UUU, &FitConfig { max_iter: 2, ..config.clone() }).is_err());
    data[(3, 1)] = f64::NAN;
    assert!(matches!(fit(&data, 1, 1, ConstraintId::UUU, &config), Err(Error::Data(_))));
}
