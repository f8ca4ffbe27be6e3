use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain length {length}: {reason}")]
    InvalidSize { length: usize, reason: String },

    #[error("integer overflow computing {what} for length {length}")]
    Overflow { what: &'static str, length: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} of size {size} exceeds the cap of {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("Lanczos did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NotConverged {
        iterations: usize,
        best_residual: f64,
    },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("complex amplitudes are not supported by the quadruple identity")]
    ComplexAmplitudes,

    #[error("run {run}: mean quadruple kernel {mean:e} is not positive; input likely carries signs")]
    NonPositiveMean { run: usize, mean: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gauge-invariant sector is empty")]
    EmptyGaugeSector,

    #[error("grid is not uniform: {0}")]
    NonUniformGrid(String),

    #[error("every grid point failed; first failure: {0}")]
    AllPointsFailed(String),

    #[error("configuration errors:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Format { path: PathBuf, message: String },
}

/// One problem found while validating a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line, when the issue is tied to one.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
