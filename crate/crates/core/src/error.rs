use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One problem found while validating a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    /// 1-based line number, `None` when the key is missing altogether.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum SlipError {
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("mesh Peclet number {peclet:.4} >= 1 (|b| = {speed}, h = {h}, eps = {eps}); refine the state grid")]
    Peclet {
        peclet: f64,
        speed: f64,
        h: f64,
        eps: f64,
    },

    #[error("singular matrix encountered at pivot {0} during factorization")]
    Singular(usize),

    #[error("fixed-point inverse map does not contract: |t| * L = {0} > 0.5")]
    Contraction(f64),

    #[error("exhaustive enumeration too large: {0} assignments (limit 1e6)")]
    InstanceTooLarge(f64),

    #[error("branch-and-bound hit the node limit ({0}) without certifying optimality")]
    NodeLimit(usize),

    #[error("subproblem solver returned a negative predicted reduction {0:e}")]
    Soundness(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl SlipError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SlipError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        SlipError::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numerical or solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SlipError::Config(_)
            | SlipError::Usage(_)
            | SlipError::Parse { .. }
            | SlipError::Peclet { .. }
            | SlipError::Io { .. } => 1,
            SlipError::Singular(_)
            | SlipError::Contraction(_)
            | SlipError::InstanceTooLarge(_)
            | SlipError::NodeLimit(_)
            | SlipError::Soundness(_) => 2,
        }
    }
}

pub type Result<T, E = SlipError> = std::result::Result<T, E>;
