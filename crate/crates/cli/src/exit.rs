use std::fmt;

use awemixer::Error;

pub const INTERNAL: i32 = 1;
pub const CONFIG: i32 = 2;
pub const DATA: i32 = 3;
pub const NUMERIC: i32 = 4;

/// An error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: CONFIG,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: DATA,
            message: msg.into(),
        }
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        CliError {
            code: INTERNAL,
            message: format!("{context}: {e}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => CONFIG,
            Error::Parse { .. } | Error::Format(_) | Error::Input(_) | Error::Io(_) => DATA,
            Error::NonFiniteLoss { .. } => NUMERIC,
            Error::Dimension { .. } | Error::Contract(_) | Error::Oracle(_) | Error::Json(_) => {
                INTERNAL
            }
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}
