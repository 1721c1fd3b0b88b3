//! Library side of the `rcv` command-line tool: configuration loading,
//! manifest writing, the three command implementations, and the mapping of
//! error classes to stable exit codes.

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod manifest;

/// Errors grouped by exit code: 1 validation, 2 numerical failure, 3 IO.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn engine_is_numerical(err: &rcv_core::engine::EngineError) -> bool {
    use rcv_core::engine::EngineError;
    use rcv_core::linalg::LinalgError;
    match err {
        EngineError::Linalg(LinalgError::NotPositiveDefinite { .. }) => true,
        EngineError::FoldFailed { source, .. } => engine_is_numerical(source),
        _ => false,
    }
}

pub fn classify_engine(err: rcv_core::engine::EngineError) -> CliError {
    if engine_is_numerical(&err) {
        CliError::Numerical(err.to_string())
    } else {
        CliError::Validation(err.to_string())
    }
}

pub fn classify_ou(err: rcv_core::ou::OuError) -> CliError {
    use rcv_core::linalg::LinalgError;
    use rcv_core::ou::OuError;
    match &err {
        OuError::Linalg(LinalgError::NotPositiveDefinite { .. }) => {
            CliError::Numerical(err.to_string())
        }
        _ => CliError::Validation(err.to_string()),
    }
}

pub fn classify_curve(err: rcv_core::curves::CurveError) -> CliError {
    use rcv_core::curves::CurveError;
    match err {
        CurveError::Run { ref source, .. } if engine_is_numerical(source) => {
            CliError::Numerical(err.to_string())
        }
        CurveError::Io(_) => CliError::Io(err.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

pub fn classify_csv(err: rcv_core::io::CsvError) -> CliError {
    use rcv_core::io::CsvError;
    match err {
        CsvError::Io(_) => CliError::Io(err.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}
