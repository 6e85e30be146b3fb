//! The parsimonious skew-t factor mixture: constraint identifiers, component
//! parameters, free-parameter counting and the mixture log density.

use crate::distributions::{LowRankCov, SkewT};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the eight covariance structures.
///
/// Letters read loading matrix, error variance, isotropy; `C` means the
/// constraint is imposed (`Λ_g = Λ`, `Ψ_g = Ψ`, `Ψ_g = ψ_g I`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConstraintId {
    pub loading_constrained: bool,
    pub error_constrained: bool,
    pub isotropic: bool,
}

impl ConstraintId {
    pub const fn new(loading_constrained: bool, error_constrained: bool, isotropic: bool) -> Self {
        Self {
            loading_constrained,
            error_constrained,
            isotropic,
        }
    }

    pub const CCC: Self = Self::new(true, true, true);
    pub const CCU: Self = Self::new(true, true, false);
    pub const CUC: Self = Self::new(true, false, true);
    pub const CUU: Self = Self::new(true, false, false);
    pub const UCC: Self = Self::new(false, true, true);
    pub const UCU: Self = Self::new(false, true, false);
    pub const UUC: Self = Self::new(false, false, true);
    pub const UUU: Self = Self::new(false, false, false);

    /// All eight models in nomenclature-table order.
    pub const ALL: [Self; 8] = [
        Self::CCC,
        Self::CCU,
        Self::CUC,
        Self::CUU,
        Self::UCC,
        Self::UCU,
        Self::UUC,
        Self::UUU,
    ];

    pub fn name(&self) -> String {
        let letter = |c: bool| if c { 'C' } else { 'U' };
        [
            letter(self.loading_constrained),
            letter(self.error_constrained),
            letter(self.isotropic),
        ]
        .iter()
        .collect()
    }

    /// Position in [`ConstraintId::ALL`].
    pub fn index(&self) -> usize {
        (!self.loading_constrained as usize) * 4 + (!self.error_constrained as usize) * 2 + (!self.isotropic as usize)
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ConstraintId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let bytes = t.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(|b| *b == b'C' || *b == b'U') {
            return Err(Error::Usage(format!("unknown model identifier '{s}' (expected e.g. CCC, UUU)")));
        }
        Ok(Self::new(bytes[0] == b'C', bytes[1] == b'C', bytes[2] == b'C'))
    }
}

impl TryFrom<String> for ConstraintId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConstraintId> for String {
    fn from(c: ConstraintId) -> String {
        c.name()
    }
}

/// Parameters of one mixture component; `Σ_g = Λ_gΛ_g' + Ψ_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    pub pi: f64,
    pub mu: DVector<f64>,
    pub loadings: DMatrix<f64>,
    pub psi_diag: DVector<f64>,
    pub alpha: DVector<f64>,
    pub nu: f64,
}

impl ComponentParams {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn law(&self) -> Result<SkewT> {
        SkewT::from_low_rank(self.mu.clone(), &assemble_covariance(self)?, self.alpha.clone(), self.nu)
    }
}

/// Low-rank representation of the component scale matrix.
pub fn assemble_covariance(component: &ComponentParams) -> Result<LowRankCov> {
    LowRankCov::new(component.loadings.clone(), component.psi_diag.clone())
}

/// A fitted (or candidate) mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub g: usize,
    pub q: usize,
    pub constraint: ConstraintId,
    pub components: Vec<ComponentParams>,
    pub loglik: f64,
    pub bic: f64,
}

impl MixtureModel {
    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.dim())
    }

    /// Free parameter count `ρ` used by the BIC.
    pub fn rho(&self) -> Result<usize> {
        Ok(count_free_params(self.constraint, self.dim(), self.q, self.g)?.total_rho)
    }

    pub fn component_laws(&self) -> Result<Vec<SkewT>> {
        self.components.iter().map(ComponentParams::law).collect()
    }

    /// Check shapes, the probability simplex and the cross-component ties
    /// implied by the constraint.
    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.components.len() != self.g || self.g == 0 {
            return Err(Error::Domain(format!(
                "model declares G = {} but has {} components",
                self.g,
                self.components.len()
            )));
        }
        if self.q >= p {
            return Err(Error::Domain(format!("need q < p, got q = {}, p = {p}", self.q)));
        }
        let mut total = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            if c.mu.len() != p || c.alpha.len() != p || c.psi_diag.len() != p || c.loadings.shape() != (p, self.q) {
                return Err(Error::Domain(format!("component {k} has inconsistent dimensions")));
            }
            if !(c.pi > 0.0 && c.pi <= 1.0) {
                return Err(Error::Domain(format!("component {k} has mixing proportion {}", c.pi)));
            }
            if c.psi_diag.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain(format!("component {k} has a non-positive error variance")));
            }
            if self.constraint.isotropic && c.psi_diag.iter().any(|&v| v != c.psi_diag[0]) {
                return Err(Error::Domain(format!("component {k} violates the isotropic constraint")));
            }
            total += c.pi;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("mixing proportions sum to {total}")));
        }
        let first = &self.components[0];
        for (k, c) in self.components.iter().enumerate().skip(1) {
            if self.constraint.loading_constrained && c.loadings != first.loadings {
                return Err(Error::Domain(format!("component {k} does not share the loading matrix")));
            }
            if self.constraint.error_constrained && c.psi_diag != first.psi_diag {
                return Err(Error::Domain(format!("component {k} does not share the error variances")));
            }
        }
        Ok(())
    }
}

/// Log of `Σ_g π_g ζ(x | component g)`.
pub fn mixture_log_density(x: &DVector<f64>, model: &MixtureModel) -> Result<f64> {
    let laws = model.component_laws()?;
    let terms = laws
        .iter()
        .zip(&model.components)
        .map(|(law, c)| Ok(c.pi.ln() + law.ln_pdf(x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Result of [`count_free_params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeParams {
    /// Loadings, error variances, skewness and degrees of freedom.
    pub covariance_count: usize,
    /// `covariance_count` plus `G − 1` mixing proportions and `G·p` locations.
    pub total_rho: usize,
}

/// Free parameters of a model, counted from the constraint definitions.
pub fn count_free_params(constraint: ConstraintId, p: usize, q: usize, g: usize) -> Result<FreeParams> {
    if g == 0 || q == 0 || q >= p {
        return Err(Error::Domain(format!("invalid dimensions p = {p}, q = {q}, G = {g}")));
    }
    let per_loading = p * q - q * (q - 1) / 2;
    let loadings = if constraint.loading_constrained {
        per_loading
    } else {
        g * per_loading
    };
    let errors = match (constraint.error_constrained, constraint.isotropic) {
        (true, true) => 1,
        (true, false) => p,
        (false, true) => g,
        (false, false) => g * p,
    };
    let skewness = g * p;
    let dof = g;
    let covariance_count = loadings + errors + skewness + dof;
    Ok(FreeParams {
        covariance_count,
        total_rho: (g - 1) + g * p + covariance_count,
    })
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    pi: f64,
    mu: Vec<f64>,
    loadings: Vec<f64>,
    psi_diag: Vec<f64>,
    alpha: Vec<f64>,
    nu: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    g: usize,
    q: usize,
    constraint: ConstraintId,
    loglik: f64,
    bic: f64,
    rho: usize,
    components: Vec<ComponentJson>,
}

impl ComponentParams {
    fn to_json(&self) -> ComponentJson {
        let (p, q) = self.loadings.shape();
        let mut loadings = Vec::with_capacity(p * q);
        for i in 0..p {
            for k in 0..q {
                loadings.push(self.loadings[(i, k)]);
            }
        }
        ComponentJson {
            pi: self.pi,
            mu: self.mu.iter().copied().collect(),
            loadings,
            psi_diag: self.psi_diag.iter().copied().collect(),
            alpha: self.alpha.iter().copied().collect(),
            nu: self.nu,
        }
    }

    fn from_json(c: ComponentJson, q: usize) -> Result<Self> {
        let p = c.mu.len();
        if c.loadings.len() != p * q {
            return Err(Error::Data(format!(
                "loadings have {} entries, expected p*q = {}",
                c.loadings.len(),
                p * q
            )));
        }
        Ok(Self {
            pi: c.pi,
            mu: DVector::from_vec(c.mu),
            loadings: DMatrix::from_row_slice(p, q, &c.loadings),
            psi_diag: DVector::from_vec(c.psi_diag),
            alpha: DVector::from_vec(c.alpha),
            nu: c.nu,
        })
    }
}

impl MixtureModel {
    /// JSON document `{g, q, constraint, loglik, bic, rho, components}`;
    /// loadings are stored row-major.
    pub fn to_json_string(&self) -> Result<String> {
        let doc = ModelJson {
            g: self.g,
            q: self.q,
            constraint: self.constraint,
            loglik: self.loglik,
            bic: self.bic,
            rho: self.rho()?,
            components: self.components.iter().map(ComponentParams::to_json).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(s)?;
        let q = doc.q;
        let components = doc
            .components
            .into_iter()
            .map(|c| ComponentParams::from_json(c, q))
            .collect::<Result<Vec<_>>>()?;
        let model = Self {
            g: doc.g,
            q,
            constraint: doc.constraint,
            components,
            loglik: doc.loglik,
            bic: doc.bic,
        };
        model.validate()?;
        Ok(model)
    }
}
