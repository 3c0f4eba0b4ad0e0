use std::fmt;

use kbqa_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISSING: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(EXIT_VALIDATION, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self::new(EXIT_MISSING, message)
    }

    pub fn provider(message: impl Into<String>) -> Self {
        Self::new(EXIT_PROVIDER, message)
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Record { .. } | Error::Json(_) | Error::IndexFormat(_) => EXIT_VALIDATION,
        Error::Empty(_) => EXIT_MISSING,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        Error::Provider(_) | Error::Http(_) => EXIT_PROVIDER,
        _ => EXIT_FAILURE,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

impl From<kbqa_core::provider::ProviderError> for CliError {
    fn from(e: kbqa_core::provider::ProviderError) -> Self {
        match e {
            kbqa_core::provider::ProviderError::Config(m) => Self::validation(m),
            other => Self::provider(other.to_string()),
        }
    }
}

impl From<kbqa_core::generation::AnswerError> for CliError {
    fn from(e: kbqa_core::generation::AnswerError) -> Self {
        e.error.into()
    }
}
