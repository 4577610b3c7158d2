use thiserror::Error;

/// Phase of impact segmentation that failed to locate its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentPhase {
    FreeFall,
    Impact,
}

impl std::fmt::Display for SegmentPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SegmentPhase::FreeFall => f.write_str("free fall"),
            SegmentPhase::Impact => f.write_str("impact"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("segmentation failed: no {phase} phase found ({detail})")]
    Segmentation { phase: SegmentPhase, detail: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate loss window: impact_start and peak are both at index {index}")]
    DegenerateWindow { index: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
