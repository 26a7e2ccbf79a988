use std::path::PathBuf;

use thiserror::Error;

/// A single problem found while validating an input file or config.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    /// 1-based line number, when the problem maps to a line.
    pub line: Option<usize>,
    /// Field or record the problem refers to.
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}", format_issues(.path, .issues))]
    Validation { path: PathBuf, issues: Vec<Issue> },
}

fn format_issues(path: &std::path::Path, issues: &[Issue]) -> String {
    let mut out = format!("{}: {} validation error(s)", path.display(), issues.len());
    for issue in issues {
        out.push_str("\n  ");
        out.push_str(&issue.to_string());
    }
    out
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
