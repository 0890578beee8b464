use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller asked for something that cannot be done with the given arguments.
    Usage,
    /// An input could not be read or did not parse.
    Input,
    /// The data is readable but violates an ordering or integrity constraint.
    Integrity,
}

#[non_exhaustive]
#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a BGZF file: {0}")]
    NotBgzf(String),
    #[error("corrupt BGZF block: {0}")]
    Corrupt(String),
    #[error("truncated input: {0}")]
    Truncated(String),
    #[error("payload of {0} bytes exceeds the BGZF block limit")]
    BlockTooLarge(usize),
    #[error("invalid compression level {0} (expected 1-9)")]
    CompressionLevel(u32),
    #[error("range error: {0}")]
    Range(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<u64>, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("sort-order error at line {line}: {msg}")]
    SortOrder { line: u64, msg: String },
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse { line: None, msg: msg.into() }
    }

    pub fn parse_at(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse { line: Some(line), msg: msg.into() }
    }

    /// Attaches a line number to a parse error that lacks one.
    pub fn at_line(self, line: u64) -> Self {
        match self {
            Error::Parse { line: None, msg } => Error::Parse { line: Some(line), msg },
            other => other,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) => ErrorClass::Usage,
            Error::SortOrder { .. } | Error::Corrupt(_) | Error::Truncated(_) => ErrorClass::Integrity,
            _ => ErrorClass::Input,
        }
    }
}
