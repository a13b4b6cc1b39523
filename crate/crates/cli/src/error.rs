use std::fmt;
use std::path::Path;

use refcast_core::biassim::SimError;
use refcast_core::governance::AppraisalError;
use refcast_core::ingest::IngestError;
use refcast_core::model::ModelError;
use refcast_core::rcf::RcfError;
use refcast_core::refclass::ClassError;

pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INSUFFICIENT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// A failure reported as `refcast: error[CODE]: message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, exit: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            exit,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new("USAGE", EXIT_USAGE, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::new("IO", EXIT_IO, format!("{}: {err}", path.display()))
    }

    pub fn domain(code: &'static str, message: impl Into<String>) -> Self {
        CliError::new(code, EXIT_DOMAIN, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "refcast: error[{}]: {}", self.code, self.message)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::MissingField { .. } => "MISSING_FIELD",
            ModelError::ZeroForecast { .. } => "ZERO_FORECAST",
            ModelError::BasisMismatch { .. } => "BASIS_MISMATCH",
            ModelError::NegativeAmount(_) => "NEGATIVE_AMOUNT",
            ModelError::Invalid(_) => "INVALID",
        };
        CliError::domain(code, e.to_string())
    }
}

impl From<ClassError> for CliError {
    fn from(e: ClassError) -> Self {
        let message = e.to_string();
        match e {
            ClassError::NoMatch => CliError::new("NO_MATCH", EXIT_INSUFFICIENT, message),
            ClassError::ClassTooSmall { .. } => {
                CliError::new("CLASS_TOO_SMALL", EXIT_INSUFFICIENT, message)
            }
            ClassError::InvalidFilter(_) => CliError::domain("INVALID_FILTER", message),
            ClassError::MetricMismatch { .. } => CliError::domain("METRIC_MISMATCH", message),
            ClassError::InvalidRisk(_) => CliError::domain("INVALID_RISK", message),
            ClassError::InvalidAlpha(_) => CliError::domain("INVALID_ALPHA", message),
            ClassError::Model(m) => m.into(),
        }
    }
}

impl From<RcfError> for CliError {
    fn from(e: RcfError) -> Self {
        let message = e.to_string();
        match e {
            RcfError::InsufficientPairs(_) => {
                CliError::new("INSUFFICIENT_PAIRS", EXIT_INSUFFICIENT, message)
            }
            RcfError::DegenerateVariance(_) => {
                CliError::new("DEGENERATE_VARIANCE", EXIT_INSUFFICIENT, message)
            }
            RcfError::VariableMismatch { .. } => CliError::domain("VARIABLE_MISMATCH", message),
            RcfError::InvalidReliability(_) => CliError::domain("INVALID_RELIABILITY", message),
            RcfError::InvalidEstimate(_) => CliError::domain("INVALID_ESTIMATE", message),
            RcfError::MetricMismatch(_) => CliError::domain("METRIC_MISMATCH", message),
            RcfError::Model(m) => m.into(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => CliError::io(&path, source),
            IngestError::Parse(m) => CliError::domain("PARSE", m),
            IngestError::Invalid(report) => {
                let mut message = format!("dataset rejected with {} error(s)", report.errors.len());
                for issue in &report.errors {
                    message.push_str(&format!("\n  {issue}"));
                }
                CliError::domain("VALIDATION", message)
            }
        }
    }
}

impl From<AppraisalError> for CliError {
    fn from(e: AppraisalError) -> Self {
        let code = match e {
            AppraisalError::InvalidRate(_) => "INVALID_RATE",
            AppraisalError::NonFinite => "INVALID",
            AppraisalError::NoSignChange => "NO_SIGN_CHANGE",
            AppraisalError::NoRootInBracket { .. } => "NO_ROOT_IN_BRACKET",
        };
        CliError::domain(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::domain("INVALID_CONFIG", e.to_string())
    }
}
