use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mask dimensions differ: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    #[error("{0}")]
    EmptyMask(&'static str),

    #[error("invalid run-length encoding: {0}")]
    InvalidRle(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate record {index} (frame {frame}, interval {interval}) has no score for prompt label {label:?}")]
    MissingScore {
        index: usize,
        frame: usize,
        interval: usize,
        label: String,
    },

    #[error("degenerate centerline: head coincides with center of mass")]
    DegenerateCenterline,

    #[error("series of length {len} is shorter than the smoothing window {window}; use a shorter window")]
    SeriesTooShort { len: usize, window: usize },

    #[error("insufficient frames: {0}")]
    InsufficientFrames(String),

    #[error("all {0} track propagations failed")]
    AllPropagationsFailed(usize),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("swimmer {swimmer} leaves the image at frame {frame}")]
    SwimmerOutOfFrame { swimmer: usize, frame: usize },

    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
