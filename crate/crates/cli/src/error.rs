use std::fmt::Display;

/// Input error: unreadable files, malformed data, nothing to process.
pub const EXIT_INPUT: u8 = 2;
/// Quantization of the run does not match the model.
pub const EXIT_CONFIG_MISMATCH: u8 = 3;
/// A trajectory is too short to transform or segment.
pub const EXIT_UNPROCESSABLE: u8 = 4;
/// Oracle disagreement.
pub const EXIT_CHECK_FAILED: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    /// Prefix a library error with context, keeping its exit code.
    pub fn context(context: impl Display) -> impl FnOnce(drivepat::Error) -> Self {
        move |err| {
            let mut cli = CliError::from(err);
            cli.message = format!("{context}: {}", cli.message);
            cli
        }
    }
}

impl From<drivepat::Error> for CliError {
    fn from(err: drivepat::Error) -> Self {
        let code = match err {
            drivepat::Error::ConfigMismatch(_) => EXIT_CONFIG_MISMATCH,
            drivepat::Error::TooShort { .. } => EXIT_UNPROCESSABLE,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::input(err.to_string())
    }
}
