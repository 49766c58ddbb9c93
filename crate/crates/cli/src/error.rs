//! Failure classes and their exit codes.

use serde_json::json;
use wwdecay_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    Config(String),
    /// A core error; its class decides the exit code.
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                Error::InvalidSystem(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::GridTooCoarse(_)
                | Error::Recurrence { .. }
                | Error::Regime(_)
                | Error::AtomAtOrigin => 1,
                Error::StepUnderflow { .. }
                | Error::MaxSteps(_)
                | Error::PoleHit { .. }
                | Error::Singular
                | Error::NotConverged { .. }
                | Error::Quadrature(_)
                | Error::FitWindow(_)
                | Error::NonPositiveSurvival(_) => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(_) if self.exit_code() == 1 => "validation",
            CliError::Core(_) => "numerical",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Core(Error::InvalidSystem(list)) = self {
            v["violations"] = json!(list);
        }
        v.to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
