use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),

    #[error("speed channel has a non-finite or non-positive value at sample {index}")]
    InvalidSpeed { index: usize },

    #[error("signal of length {len} is too short for a filter of length {filter_len}")]
    SignalTooShort { len: usize, filter_len: usize },

    #[error("cannot normalize a zero filter")]
    ZeroFilter,

    #[error("angle span is zero; the cyclic-order scale is undefined")]
    ZeroAngleSpan,

    #[error("cyclic band [{lo}, {hi}] contains no grid points")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("noise band [{lo}, {hi}] has no support outside the targeted bands")]
    EmptyDenominator { lo: f64, hi: f64 },

    #[error("band [{lo}, {hi}] extends past the cyclic grid maximum {alpha_max}")]
    BandOutsideGrid { lo: f64, hi: f64, alpha_max: f64 },

    #[error("objective denominator is degenerate ({0})")]
    DegenerateDenominator(f64),

    #[error("cached spectrum does not match the filter it is used with")]
    StaleCache,

    #[error("autocorrelation is singular at order {order}")]
    SingularAutocorrelation { order: usize },

    #[error("unknown variant `{0}`; expected one of GES2N-ICS2, GES2N-Mean-Nf, GES2N-Mean-Np, GES2N-Max-Nf, GES2N-Max-Np")]
    UnknownVariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
