use thiserror::Error;

/// Failures surfaced by the command-line tool, each with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("input schema error: {0}")]
    Schema(String),
    #[error("degenerate optimization: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Core(ges2n_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::Core(_) => 1,
        }
    }
}

impl From<ges2n_core::Error> for CliError {
    fn from(e: ges2n_core::Error) -> Self {
        use ges2n_core::Error as E;
        match e {
            E::Io(m) => CliError::Io(m),
            E::Schema(_) | E::InvalidSampleRate(_) | E::InvalidSpeed { .. } => CliError::Schema(e.to_string()),
            E::Config(_)
            | E::UnknownVariant(_)
            | E::EmptyBand { .. }
            | E::EmptyDenominator { .. }
            | E::BandOutsideGrid { .. }
            | E::SignalTooShort { .. } => CliError::Config(e.to_string()),
            E::DegenerateDenominator(_) | E::ZeroFilter | E::ZeroAngleSpan | E::SingularAutocorrelation { .. } => {
                CliError::Degenerate(e.to_string())
            }
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
