use std::fmt;

use groupperm_core::Error as CoreError;

/// Exit status for successful runs.
pub const EXIT_OK: i32 = 0;
/// Exit status for unreadable input, bad configuration or invalid data.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status when an enumeration guard or attempt cap stops a computation.
pub const EXIT_GUARD: i32 = 3;
/// Exit status for failures writing output.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Guard(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Guard(_) => EXIT_GUARD,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Guard(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_guard() {
            CliError::Guard(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
