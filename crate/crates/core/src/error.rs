use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::marketdata::IngestError;
use crate::measures::MeasureError;
use crate::regress::RegressError;
use crate::report::ReportError;
use crate::stats::StatsError;
use crate::synth::SynthError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or inconsistent input data.
    Data,
    /// A numerical routine failed (non-convergence, rank deficiency, ...).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Stats(StatsError::NoConvergence { .. }) => ErrorCategory::Numeric,
            Error::Stats(_) => ErrorCategory::Data,
            Error::Regress(RegressError::Collinear { .. }) => ErrorCategory::Numeric,
            Error::Regress(RegressError::Stats(_)) => ErrorCategory::Numeric,
            Error::Regress(_) => ErrorCategory::Data,
            Error::Synth(SynthError::UnrepresentableSpread { .. }) => ErrorCategory::Numeric,
            // every fit of every model failed
            Error::Analysis(AnalysisError::NoSummaries) => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}
