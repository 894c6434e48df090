use thiserror::Error;

/// Errors surfaced by the computational engines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid step law: {0}")]
    InvalidLaw(String),

    #[error("norming inversion failed at n = {n}: {reason}")]
    NonConvergence { n: f64, reason: String },

    #[error("window of {needed} lattice sites exceeds the memory cap of {cap} sites")]
    WindowOverflow { needed: usize, cap: usize },

    #[error("ladder-height horizon leaves {defect:e} unaccounted mass (limit {limit:e})")]
    DefectTooLarge { defect: f64, limit: f64 },

    #[error("weak descending ladder atom {0} is too close to 1")]
    AtomTooLarge(f64),

    #[error("quadrature did not reach {requested:e}: achieved {achieved:e}")]
    QuadratureFailure { requested: f64, achieved: f64 },

    #[error("resolution too coarse: c_n = {cn:.2} sites per unit, need at least {min}")]
    ResolutionTooCoarse { cn: f64, min: f64 },

    #[error("no independent total-mass oracle configured for q normalization")]
    NormalizationUnavailable,

    #[error("integrand is not numerically integrable at 0: {0}")]
    SingularIntegrand(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("configuration error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    /// Attach the computation cell that failed.
    pub fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::InCell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }
}
