use poisson3d::Error;

/// Failures that end a run, mapped onto the exit code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input that is caught before any computation.
    #[error("{0}")]
    Input(String),
    #[error("cannot write `{path}`: {source}")]
    Write { path: String, source: std::io::Error },
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Write { .. } => 2,
            CliError::Library(Error::Parse(_) | Error::Load(_)) => 2,
            CliError::Library(_) => 3,
        }
    }
}

impl From<poisson3d::expr::ParseError> for CliError {
    fn from(e: poisson3d::expr::ParseError) -> Self {
        CliError::Library(e.into())
    }
}

impl From<poisson3d::model::file::LoadError> for CliError {
    fn from(e: poisson3d::model::file::LoadError) -> Self {
        CliError::Library(e.into())
    }
}
