use std::fmt;

use thiserror::Error;

/// One offending key in a configuration, with the constraint it violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

/// Validation failure listing every offending key at once.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(key: impl Into<String>, message: impl Into<String>) -> Self {
        let mut err = Self::new();
        err.push(key, message);
        err
    }

    pub fn push(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            key: key.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// Prefixes every key, used when a nested table is validated on its own.
    pub fn nested(mut self, prefix: &str) -> Self {
        for issue in &mut self.issues {
            issue.key = format!("{prefix}.{}", issue.key);
        }
        self
    }

    pub fn merge(&mut self, other: ConfigError) {
        self.issues.extend(other.issues);
    }

    pub fn into_result(self) -> Result<(), ConfigError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.issues.iter().map(|i| i.key.as_str())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", issue.key, issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigError),

    #[error("expected {expected} bits, got {actual}")]
    BitCount { expected: usize, actual: usize },

    #[error("invalid GSM symbol at t={t}, user={user}: {reason}")]
    InvalidSlice {
        t: usize,
        user: usize,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel has {taps} taps but a cyclic prefix of {n_cp} covers at most {}", n_cp + 1)]
    ChannelTooLong { taps: usize, n_cp: usize },

    #[error("per-frequency system at bin {bin} is singular; give every coordinate a positive penalty")]
    Singular { bin: usize },

    #[error("exhaustive search needs {candidates:.3e} candidates, above the guard of {guard}")]
    GuardExceeded { candidates: f64, guard: u64 },

    #[error("delay profile: {0}")]
    Profile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
