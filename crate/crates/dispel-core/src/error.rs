//! Error type shared by every module in the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A cell failed to parse; rows and columns are 1-based file positions.
    #[error("parse error in {name} at row {row}, column {column}: {message}")]
    Parse {
        name: String,
        row: usize,
        column: usize,
        message: String,
    },

    /// The file parsed but does not describe a usable dataset.
    #[error("schema error: {0}")]
    Schema(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A stratified split cannot honor per-class proportions.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// Fold construction is impossible for the requested k.
    #[error("fold error: {0}")]
    Fold(String),

    /// The input is degenerate for the requested analysis (e.g. one class).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A requested output dimensionality exceeds what the data supports.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid configuration or parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// An empty or inverted range was supplied.
    #[error("invalid range: {0}")]
    Range(String),

    /// A per-class table is missing an entry for the requested label.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// A numerical routine failed; the message carries a condition diagnostic.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// An error from a lower stage, annotated with the pipeline stage name.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the name of the pipeline stage it surfaced in.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code contract: 1 configuration, 2 data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Range(_) | Error::Dimension(_) => 1,
            Error::Parse { .. }
            | Error::Schema(_)
            | Error::Shape(_)
            | Error::Stratification(_)
            | Error::Fold(_)
            | Error::Degenerate(_)
            | Error::Lookup(_)
            | Error::Io { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_cli_contract() {
        assert_eq!(Error::Config("x".into()).exit_code(), 1);
        assert_eq!(Error::Range("x".into()).exit_code(), 1);
        assert_eq!(Error::Dimension("x".into()).exit_code(), 1);
        assert_eq!(Error::Schema("x".into()).exit_code(), 2);
        assert_eq!(
            Error::Parse {
                name: "d".into(),
                row: 1,
                column: 2,
                message: "m".into()
            }
            .exit_code(),
            2
        );
        assert_eq!(Error::Numerical("x".into()).exit_code(), 3);
        // Stage wrapping preserves the underlying code.
        assert_eq!(Error::Numerical("x".into()).at_stage("fit").exit_code(), 3);
    }
}
