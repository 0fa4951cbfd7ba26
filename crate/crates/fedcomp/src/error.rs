use alloc::string::String;
use core::fmt;

/// Errors surfaced by the core numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or model had a different length than its peer.
    LengthMismatch { expected: usize, got: usize },
    /// A fusion rule received no models.
    EmptyModelList,
    /// A client had no training windows.
    EmptyTrainingSet,
    /// A probability or rate was outside [0, 1].
    RateOutOfRange { name: &'static str, value: f64 },
    /// A parameter violated its admissible range.
    InvalidParameter { name: &'static str, reason: String },
    /// A feature had zero variance on the training prefix.
    ZeroVariance { feature: usize },
    /// Windowing requested on a segment shorter than the window.
    SegmentTooShort { len: usize, window: usize },
    /// Corruption was applied to a series that already carries it.
    AlreadyCorrupted(&'static str),
    /// Model architecture does not match the data it was applied to.
    ArchitectureMismatch { model_dim: usize, data_dim: usize },
    /// Threshold calibration needs at least two error samples.
    TooFewSamples { got: usize },
    /// No missing cells to evaluate imputation on.
    NoMissingCells,
    /// Malformed byte stream while decoding a serialized model.
    Decode(String),
    /// A client failed during a federated round.
    ClientFailed { client_id: usize, round: usize, cause: alloc::boxed::Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::EmptyModelList => write!(f, "fusion requires at least one model"),
            Error::EmptyTrainingSet => write!(f, "client has no training windows"),
            Error::RateOutOfRange { name, value } => {
                write!(f, "{name} = {value} is outside [0, 1]")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::ZeroVariance { feature } => {
                write!(f, "feature {feature} has zero variance on the training prefix")
            }
            Error::SegmentTooShort { len, window } => {
                write!(f, "segment of length {len} is shorter than window {window}")
            }
            Error::AlreadyCorrupted(what) => write!(f, "series already carries {what}"),
            Error::ArchitectureMismatch { model_dim, data_dim } => {
                write!(f, "model input dim {model_dim} does not match data dim {data_dim}")
            }
            Error::TooFewSamples { got } => {
                write!(f, "threshold calibration needs >= 2 samples, got {got}")
            }
            Error::NoMissingCells => write!(f, "no missing cells to evaluate"),
            Error::Decode(msg) => write!(f, "decode error: {msg}"),
            Error::ClientFailed { client_id, round, cause } => {
                write!(f, "client {client_id} failed in round {round}: {cause}")
            }
        }
    }
}

impl core::error::Error for Error {}
