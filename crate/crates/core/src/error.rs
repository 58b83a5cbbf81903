use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("zero-length audio")]
    EmptyAudio,

    #[error("non-finite sample at channel {channel}, index {index}")]
    NonFinite { channel: usize, index: usize },

    #[error("silent input: {0}")]
    Silent(&'static str),

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("expected stereo input")]
    NotStereo,

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("unstable filter design: {0}")]
    UnstableFilter(String),

    #[error("empty impulse response")]
    EmptyImpulseResponse,

    #[error("empty bank: {0}")]
    EmptyBank(&'static str),

    #[error("prompt bank has no templates for `{0}`")]
    MissingPromptKind(String),

    #[error("track too short for excerpting: {duration:.2} s (need {needed:.2} s)")]
    TrackTooShort { duration: f64, needed: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value: {0}")]
    NonFiniteValue(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
