//! Exit-code classification.

use std::fmt;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERICAL: u8 = 3;

/// An error tagged with the exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: DATA,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: NUMERICAL,
            message: message.into(),
        }
    }

    /// Explicit tags win, then core configuration errors count as usage,
    /// anything else is a data error.
    pub fn exit_code(err: &anyhow::Error) -> u8 {
        for cause in err.chain() {
            if let Some(f) = cause.downcast_ref::<Failure>() {
                return f.code;
            }
            if let Some(thermobg::Error::Config(_)) = cause.downcast_ref::<thermobg::Error>() {
                return USAGE;
            }
        }
        DATA
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}
