use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters: odd grid sizes, mismatched genome shapes, bad config files.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of an operation (negative rate, center off grid).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested finite-sigma evaluation exceeds the compute cap.
    #[error("physics cap exceeded: {0}")]
    PhysicsCap(String),

    /// Contrast of a map whose background has zero spread.
    #[error("contrast undefined: background standard deviation is zero")]
    UndefinedContrast,

    /// A scan stage's best point sits on the edge of its region.
    #[error("scan argmax ({cx}, {cy}) lies on the boundary of the stage region")]
    ScanBoundary { cx: i64, cy: i64 },

    /// A flat-SLM measurement returned no counts even after widening the window.
    #[error("flat reference recorded zero counts over {window} s; kappa is miscalibrated")]
    ZeroReference { window: f64 },

    #[error("objective failed: {0}")]
    Objective(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
