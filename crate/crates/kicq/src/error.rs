use std::path::PathBuf;

use kicq_core::calibration::CalibrationError;
use kicq_core::circuit::CircuitError;
use kicq_core::fit::FitError;
use kicq_core::fock::FockError;
use kicq_core::readout::ReadoutError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}, record {record}: {message}", path.display())]
    Record { path: PathBuf, record: usize, message: String },
    #[error("device file: {0}")]
    Device(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
