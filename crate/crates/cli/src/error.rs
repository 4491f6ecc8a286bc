use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] qus_core::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 2 for anything the caller can fix by changing flags or inputs,
    /// 1 for failures inside the pipeline.
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Core(qus_core::Error::Numerical(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Internal(_) => 1,
        };
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a path to I/O failures so messages say which file was at fault.
pub trait WithPath<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T> WithPath<T> for qus_core::Result<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| match e {
            qus_core::Error::Numerical(_) => CliError::Core(e),
            qus_core::Error::Io(io) => CliError::Input(format!("{}: {io}", path.display())),
            other => CliError::Input(format!("{}: {other}", path.display())),
        })
    }
}

impl<T> WithPath<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}
