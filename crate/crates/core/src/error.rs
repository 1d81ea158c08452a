use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible encodings: {left} vs {right}")]
    IncompatibleEncodings { left: String, right: String },

    #[error("relation {relation} does not accept {encoding} input")]
    UnsupportedEncoding { relation: String, encoding: String },

    #[error("invalid relation parameters: {0}")]
    InvalidRelation(String),

    #[error("relation {0} is not enumerable")]
    NotEnumerable(String),

    #[error("bandlimit canonicalizer did not settle after {0} cycles")]
    NoFixedPoint(usize),

    #[error("program truncated")]
    Truncated,

    #[error("program overlong: bits remain after HALT")]
    Overlong,

    #[error("program output exceeds {0} symbols")]
    Overrun(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("string {0} not reached at L={1}")]
    NotReached(String, u32),

    #[error("external compressor failed: {0}")]
    ExternalTool(String),

    #[error("undefined distance: both operands have zero complexity")]
    UndefinedDistance,

    #[error("format error: {0}")]
    Format(String),

    #[error("table parse error at line {line}: {message}")]
    TableParse { line: usize, message: String },

    #[error("classification error: {0}")]
    Classification(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
