use crate::distributions::{expectations_from_bessel, woodbury_inverse};
use crate::error::{Error, Result};
use crate::model::{assemble_covariance, log_sum_exp, MixtureModel};
use crate::specfun::{digamma, dlog_bessel_k_dorder};
use nalgebra::{DMatrix, DVector};

/// Error variances never drop below this.
pub const PSI_FLOOR: f64 = 1e-6;

const DEGENERATE_M: f64 = 1e-10;

/// Responsibilities and latent-scale expectations from one E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentExpectations {
    /// `ẑ_ig`.
    pub z: DMatrix<f64>,
    /// `E[Y | x_i, Z_ig = 1]`.
    pub a: DMatrix<f64>,
    /// `E[1/Y | x_i, Z_ig = 1]`.
    pub b: DMatrix<f64>,
    /// `E[log Y | x_i, Z_ig = 1]`.
    pub c: DMatrix<f64>,
    /// Observed-data log-likelihood of the parameters the step was run at.
    pub loglik: f64,
}

/// Responsibility-weighted summaries of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentAggregates {
    pub n_g: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    pub m_g: f64,
    pub x_bar: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

pub fn e_step(data: &DMatrix<f64>, model: &MixtureModel) -> Result<LatentExpectations> {
    e_step_with(data, model, true)
}

/// E-step; with `log_moments` false the `c` matrix is left at zero, which
/// skips the order derivative. CM-step 2 never reads `c`.
pub(crate) fn e_step_with(data: &DMatrix<f64>, model: &MixtureModel, log_moments: bool) -> Result<LatentExpectations> {
    let n = data.nrows();
    let g_count = model.g;
    if data.ncols() != model.dim() {
        return Err(Error::Domain(format!(
            "data has {} columns, model expects {}",
            data.ncols(),
            model.dim()
        )));
    }
    let laws = model.component_laws()?;
    let mut log_w = DMatrix::zeros(n, g_count);
    let mut a = DMatrix::zeros(n, g_count);
    let mut b = DMatrix::zeros(n, g_count);
    let mut c = DMatrix::zeros(n, g_count);
    for (g, (law, comp)) in laws.iter().zip(&model.components).enumerate() {
        let log_pi = comp.pi.ln();
        let (delta, cross) = law.row_terms(data);
        for i in 0..n {
            let (lp, log_k, log_k_next) = law.ln_pdf_with_bessel(delta[i], cross[i])?;
            let gig = law.conditional_gig(delta[i]);
            let dlog_k = if log_moments {
                dlog_bessel_k_dorder(gig.lambda, gig.omega())?
            } else {
                0.0
            };
            let e = expectations_from_bessel(&gig, log_k, log_k_next, dlog_k);
            log_w[(i, g)] = log_pi + lp;
            a[(i, g)] = e.e_y;
            b[(i, g)] = e.e_inv_y;
            if log_moments {
                c[(i, g)] = e.e_log_y;
            }
        }
    }
    let mut z = DMatrix::zeros(n, g_count);
    let mut loglik = 0.0;
    let mut row = vec![0.0; g_count];
    for i in 0..n {
        for (g, r) in row.iter_mut().enumerate() {
            *r = log_w[(i, g)];
        }
        let total = log_sum_exp(&row);
        if !total.is_finite() {
            return Err(Error::Numerical(format!("row {i}: every component density underflows")));
        }
        loglik += total;
        for g in 0..g_count {
            z[(i, g)] = (row[g] - total).exp();
        }
    }
    for m in [&a, &b, &c] {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite latent-scale expectation".into()));
        }
    }
    Ok(LatentExpectations { z, a, b, c, loglik })
}

fn zn(exp: &LatentExpectations, g: usize) -> f64 {
    exp.z.column(g).sum()
}

/// CM-step 1: mixing proportions, locations, skewness and degrees of freedom.
///
/// Returns a copy of `model` with those fields replaced; loadings and error
/// variances are untouched.
pub fn cm_step_1(
    data: &DMatrix<f64>,
    exp: &LatentExpectations,
    model: &MixtureModel,
    min_component_size: f64,
    nu_bounds: (f64, f64),
) -> Result<MixtureModel> {
    let (n, p) = data.shape();
    let mut out = model.clone();
    for g in 0..model.g {
        let z = exp.z.column(g);
        let n_g = zn(exp, g);
        if !(n_g >= min_component_size) {
            return Err(Error::ComponentCollapse {
                component: g,
                size: n_g,
                minimum: min_component_size,
            });
        }
        let a_bar = z.dot(&exp.a.column(g)) / n_g;
        let b_bar = z.dot(&exp.b.column(g)) / n_g;
        let mut m_g = 0.0;
        let mut mu = DVector::zeros(p);
        let mut alpha = DVector::zeros(p);
        let mut target = 0.0;
        for i in 0..n {
            let zi = z[i];
            let bi = exp.b[(i, g)];
            let w_mu = zi * (a_bar * bi - 1.0);
            let w_alpha = zi * (b_bar - bi);
            m_g += w_mu;
            target += zi * (exp.c[(i, g)] + bi);
            for j in 0..p {
                mu[j] += w_mu * data[(i, j)];
                alpha[j] += w_alpha * data[(i, j)];
            }
        }
        if !(m_g.abs() >= DEGENERATE_M) {
            return Err(Error::DegenerateComponent { component: g, m: m_g });
        }
        let comp = &mut out.components[g];
        comp.pi = n_g / n as f64;
        comp.mu = mu / m_g;
        comp.alpha = alpha / m_g;
        comp.nu = nu_solve(target / n_g, nu_bounds)?;
    }
    // Renormalize so that rounding in z never breaks the simplex.
    let total: f64 = out.components.iter().map(|c| c.pi).sum();
    for c in &mut out.components {
        c.pi /= total;
    }
    Ok(out)
}

/// Degrees-of-freedom equation `log(ν/2) + 1 − ψ(ν/2) − t = 0` given the
/// aggregate `t = (1/n_g) Σ ẑ(c + b)`. `f` is decreasing in `ν`, so bisection
/// applies; the nearest bound is returned without a sign change.
pub fn nu_solve(aggregate: f64, bounds: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bounds;
    if !aggregate.is_finite() {
        return Err(Error::Numerical(format!("degrees-of-freedom aggregate is {aggregate}")));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid degrees-of-freedom bounds [{lo}, {hi}]")));
    }
    let f = |nu: f64| -> Result<f64> { Ok((0.5 * nu).ln() + 1.0 - digamma(0.5 * nu)? - aggregate) };
    if f(lo)? <= 0.0 {
        return Ok(lo);
    }
    if f(hi)? >= 0.0 {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Aggregates and the skew-corrected scatter `S_g` at updated `μ̂_g`, `α̂_g`.
pub fn component_aggregates(
    data: &DMatrix<f64>,
    exp: &LatentExpectations,
    g: usize,
    mu: &DVector<f64>,
    alpha: &DVector<f64>,
) -> ComponentAggregates {
    let (n, p) = data.shape();
    let z = exp.z.column(g);
    let n_g = z.sum();
    let a_bar = z.dot(&exp.a.column(g)) / n_g;
    let b_bar = z.dot(&exp.b.column(g)) / n_g;
    let mut m_g = 0.0;
    let mut x_bar = DVector::zeros(p);
    let mut weighted = DMatrix::zeros(n, p);
    for i in 0..n {
        let zi = z[i];
        m_g += zi * (a_bar * exp.b[(i, g)] - 1.0);
        let w = (zi * exp.b[(i, g)]).sqrt();
        for j in 0..p {
            x_bar[j] += zi * data[(i, j)];
            weighted[(i, j)] = w * (data[(i, j)] - mu[j]);
        }
    }
    x_bar /= n_g;
    let offset = &x_bar - mu;
    let mut s = weighted.transpose() * &weighted / n_g;
    s -= alpha * offset.transpose();
    s -= &offset * alpha.transpose();
    s += alpha * alpha.transpose() * a_bar;
    let scatter = (&s + s.transpose()) * 0.5;
    ComponentAggregates {
        n_g,
        a_bar,
        b_bar,
        m_g,
        x_bar,
        scatter,
    }
}

/// Scatter matrix only; see [`component_aggregates`].
pub fn component_scatter(
    data: &DMatrix<f64>,
    exp: &LatentExpectations,
    g: usize,
    mu: &DVector<f64>,
    alpha: &DVector<f64>,
) -> DMatrix<f64> {
    component_aggregates(data, exp, g, mu, alpha).scatter
}

fn cholesky_solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|ch| ch.solve(rhs))
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Shared loading matrix solving `Σ_g n_g Ψ_g⁻¹ Λ Θ_g = Σ_g n_g Ψ_g⁻¹ S_g β_g'`.
///
/// `Ψ_g` is diagonal, so the system decouples by row: row `j` solves
/// `λ_j (Σ_g w_gj Θ_g) = Σ_g w_gj (S_g β_g')_j` with `w_gj = n_g / ψ_gj`.
pub(crate) fn shared_loadings(
    weights: &[f64],
    psi: &[DVector<f64>],
    s_beta_t: &[DMatrix<f64>],
    theta: &[DMatrix<f64>],
) -> Result<DMatrix<f64>> {
    let (p, q) = s_beta_t[0].shape();
    let mut out = DMatrix::zeros(p, q);
    for j in 0..p {
        let mut lhs = DMatrix::zeros(q, q);
        let mut rhs = DMatrix::zeros(q, 1);
        for g in 0..weights.len() {
            let w = weights[g] / psi[g][j];
            lhs += &theta[g] * w;
            for k in 0..q {
                rhs[(k, 0)] += w * s_beta_t[g][(j, k)];
            }
        }
        let sol = lhs
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical(format!("shared-loading system is singular at row {j}")))?;
        for k in 0..q {
            out[(j, k)] = sol[k];
        }
    }
    Ok(out)
}

/// CM-step 2: loadings then error variances, honoring the constraint.
pub fn cm_step_2(aggregates: &[ComponentAggregates], model: &MixtureModel) -> Result<MixtureModel> {
    let g_count = model.g;
    let p = model.dim();
    let q = model.q;
    let constraint = model.constraint;
    let mut thetas = Vec::with_capacity(g_count);
    let mut s_beta_t = Vec::with_capacity(g_count);
    for (g, comp) in model.components.iter().enumerate() {
        let (inv, _) = woodbury_inverse(&assemble_covariance(comp)?)?;
        let beta = comp.loadings.transpose() * inv;
        let sbt = &aggregates[g].scatter * beta.transpose();
        let mut theta = DMatrix::identity(q, q) - &beta * &comp.loadings + &beta * &sbt;
        theta = (&theta + theta.transpose()) * 0.5;
        thetas.push(theta);
        s_beta_t.push(sbt);
    }

    let new_loadings: Vec<DMatrix<f64>> = if constraint.loading_constrained {
        let weights: Vec<f64> = aggregates.iter().map(|a| a.n_g).collect();
        let psi: Vec<DVector<f64>> = model.components.iter().map(|c| c.psi_diag.clone()).collect();
        let shared = shared_loadings(&weights, &psi, &s_beta_t, &thetas)?;
        vec![shared; g_count]
    } else {
        (0..g_count)
            .map(|g| {
                // Λ = S β' Θ⁻¹, i.e. Λ' = Θ⁻¹ (S β')'.
                let t = cholesky_solve(&thetas[g], &s_beta_t[g].transpose(), &format!("Theta for component {g}"))?;
                Ok(t.transpose())
            })
            .collect::<Result<_>>()?
    };

    let diag_terms: Vec<DVector<f64>> = (0..g_count)
        .map(|g| {
            let lam = &new_loadings[g];
            let lam_theta = lam * &thetas[g];
            DVector::from_fn(p, |j, _| {
                let s_jj = aggregates[g].scatter[(j, j)];
                let cross: f64 = (0..q).map(|k| lam[(j, k)] * s_beta_t[g][(j, k)]).sum();
                let quad: f64 = (0..q).map(|k| lam_theta[(j, k)] * lam[(j, k)]).sum();
                s_jj - 2.0 * cross + quad
            })
        })
        .collect();

    let n_total: f64 = aggregates.iter().map(|a| a.n_g).sum();
    let isotropic = |d: &DVector<f64>| DVector::from_element(p, d.mean());
    let new_psi: Vec<DVector<f64>> = if constraint.error_constrained {
        let mut pooled = DVector::zeros(p);
        for (g, d) in diag_terms.iter().enumerate() {
            pooled += d * (aggregates[g].n_g / n_total);
        }
        if constraint.isotropic {
            pooled = isotropic(&pooled);
        }
        vec![pooled; g_count]
    } else if constraint.isotropic {
        diag_terms.iter().map(isotropic).collect()
    } else {
        diag_terms
    };

    let mut out = model.clone();
    for (g, comp) in out.components.iter_mut().enumerate() {
        comp.loadings = new_loadings[g].clone();
        comp.psi_diag = new_psi[g].map(|v| if v.is_nan() { v } else { v.max(PSI_FLOOR) });
        if comp.psi_diag.iter().any(|v| !v.is_finite()) || comp.loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite covariance update for component {g}")));
        }
    }
    Ok(out)
}
