use thiserror::Error;

/// Errors produced by the clustering engine and its command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be positive definite could not be factorized.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    /// A numerical step produced a non-finite or singular quantity.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A mixture component lost (almost) all of its responsibility mass.
    #[error("component {component} collapsed (n_g = {size:.3}, minimum {minimum:.3})")]
    ComponentCollapse {
        component: usize,
        size: f64,
        minimum: f64,
    },

    /// The first-cycle denominator `m_g` vanished.
    #[error("component {component} has degenerate latent-scale geometry (|m_g| = {m:.3e})")]
    DegenerateComponent { component: usize, m: f64 },

    /// Bad input data (files, cells, labels).
    #[error("data error: {0}")]
    Data(String),

    /// Invalid command-line or configuration usage.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for this error: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::Domain(_)
            | Error::Decomposition(_)
            | Error::Numerical(_)
            | Error::ComponentCollapse { .. }
            | Error::DegenerateComponent { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
