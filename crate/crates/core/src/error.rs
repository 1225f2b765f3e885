use std::path::PathBuf;

/// Failures raised by the numerical kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller broke a precondition (mismatched shapes, non-symmetric input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iterative solver did not reach its tolerance.
    #[error("numerical failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    /// The largest coupling is not unique, so the decimation order is undefined.
    #[error("degenerate maximal coupling on links {links:?} (|J| = {magnitude:e})")]
    DegenerateCoupling {
        links: Vec<(usize, usize)>,
        magnitude: f64,
    },

    /// Zero-energy single-particle levels make the half-filled ground state ambiguous.
    #[error("{count} zero mode(s) within {tolerance:e} of E = 0; choose an explicit filling policy")]
    ZeroModes { count: usize, tolerance: f64 },

    /// A least-squares design matrix lost rank.
    #[error("design matrix is rank deficient at column {column} ({name})")]
    RankDeficient { column: usize, name: String },

    /// The request exceeds a hard resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// `true` for errors caused by bad user input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Contract(_) | Error::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
