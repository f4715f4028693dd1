use std::path::PathBuf;

/// One Newton iterate: residual norm before the step and increment norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep {
    pub residual: f64,
    pub increment: f64,
}

/// Residual norms of both subproblems after one staggered iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaggerStep {
    pub mechanics: f64,
    pub phasefield: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// `beta * |E^{1/2}[eps]|` reached the ellipticity limit.
    #[error("strain-limiting ellipticity violated: beta*|E^1/2[eps]| = {monitor:.6e}")]
    LimitExceeded { monitor: f64 },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("negative radicand {0:.3e} in compliance norm (check lambda, mu)")]
    NegativeRadicand(f64),

    #[error("non-finite entry produced by the kernel on cell {cell}")]
    NonFinite { cell: usize },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("{solver} Newton iteration did not converge in {} iterations", history.len())]
    NonConvergence {
        solver: &'static str,
        history: Vec<NewtonStep>,
    },

    #[error("staggered iteration did not converge in {} iterations", history.len())]
    StaggerNonConvergence { history: Vec<StaggerStep> },

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown preset `{name}`; available presets:\n{available}")]
    UnknownPreset { name: String, available: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
