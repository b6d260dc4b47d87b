use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {field} = {value} ({reason})")]
    InvalidGeometry {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("depth must be positive or infinite, got {0}")]
    NonPositiveDepth(f64),

    #[error("disparity {disparity} exceeds the infinity disparity {limit}; no real depth produces it")]
    DisparityBeyondInfinity { disparity: f64, limit: f64 },

    #[error("zero-interaxial rig: every depth has zero disparity, so depth is ambiguous")]
    AmbiguousDepth,

    #[error("zero-interocular viewer cannot fuse disparity {0}")]
    FlatViewer(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("bands {first} and {second} overlap in depth")]
    OverlappingBands { first: usize, second: usize },

    #[error("bands {first} and {second} give a non-monotone transfer ({upper} at the end of band {first} > {lower} at the start of band {second})")]
    NonMonotoneBands {
        first: usize,
        second: usize,
        upper: f64,
        lower: f64,
    },

    #[error("shot `{shot}`: no disparity statistics for frame {frame}")]
    MissingFrameStats { shot: String, frame: i64 },

    #[error("shot `{shot}`: frame {frame} has no {side} border statistics")]
    MissingBorderStats {
        shot: String,
        frame: usize,
        side: &'static str,
    },

    #[error("infeasible: {binding}")]
    Infeasible { binding: String },

    #[error("{record}: field `{field}`: {message}")]
    Schema {
        record: String,
        field: String,
        message: String,
    },

    #[error("malformed document: {0}")]
    Json(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(
        record: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            record: record.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
