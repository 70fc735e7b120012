//! Error classes and their exit codes.

use std::fmt;
use std::process::ExitCode;

use hybrid_audit::detectors::DetectError;
use hybrid_audit::prep::PrepError;
use hybrid_audit::procedures::ProcError;
use hybrid_audit::synth::SynthError;
use hybrid_audit::TabularError;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad or inconsistent configuration.
    Config(String),
    /// Input data that cannot be processed.
    Data(String),
    /// The command ran but a quality gate was not met.
    Gate(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Gate(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Gate(m) => write!(f, "quality gate failed: {m}"),
        }
    }
}

pub fn io(context: &str, e: std::io::Error) -> Failure {
    Failure::Data(format!("{context}: {e}"))
}

fn tabular(e: TabularError) -> Failure {
    match e {
        TabularError::UnknownAttribute(_) => Failure::Config(e.to_string()),
        _ => Failure::Data(e.to_string()),
    }
}

impl From<TabularError> for Failure {
    fn from(e: TabularError) -> Self {
        tabular(e)
    }
}

impl From<PrepError> for Failure {
    fn from(e: PrepError) -> Self {
        match e {
            PrepError::Tabular(t) => tabular(t),
            PrepError::UnknownColumns(_)
            | PrepError::EmptySelection
            | PrepError::InvalidTolerance(_)
            | PrepError::MissingBaseYear(_) => Failure::Config(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<ProcError> for Failure {
    fn from(e: ProcError) -> Self {
        match e {
            ProcError::Tabular(t) => tabular(t),
            ProcError::InvalidParameter(_) | ProcError::TooManyBins { .. } => {
                Failure::Config(e.to_string())
            }
            ProcError::Detect(DetectError::InvalidEps(_) | DetectError::InvalidMinPts) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Tabular(t) => tabular(t),
            SynthError::NoFeasibleCorruption(_) | SynthError::LengthMismatch { .. } => {
                Failure::Data(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}
