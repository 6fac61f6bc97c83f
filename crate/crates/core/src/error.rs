//! Crate-wide error type.
//!
//! Two families matter to callers: configuration problems (bad key, bad value,
//! inconsistent combination) which the CLI reports with exit code 1, and
//! runtime failures (I/O, numerical divergence) which exit with code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: unknown key, unparseable value, or a value
    /// combination that cannot be run. The message names the offending key
    /// and, for file input, the line it came from.
    #[error("config error: {0}")]
    Config(String),

    /// A contract violation on a library call, e.g. merging an empty report
    /// list or asking for an epoch time with a batch larger than the shard.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// Training diverged: a loss or parameter became non-finite.
    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
