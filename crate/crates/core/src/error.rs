use thiserror::Error;

/// Failures of the analytic and Monte Carlo routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite integrand at tau = {tau}")]
    NonFinite { tau: f64 },
    #[error("quadrature did not converge: coarse = {coarse}, fine = {fine}")]
    NotConverged { coarse: f64, fine: f64 },
    #[error("position {r} outside segment [{lo}, {hi}]")]
    OutsideSegment { r: f64, lo: f64, hi: f64 },
    #[error("segment {segment} is not covered by the stream sub-strip [{start}, {end}]")]
    Uncovered { segment: u32, start: f64, end: f64 },
    #[error("value overflowed even in log space")]
    Overflow,
    #[error("steady state not reached: horizon {horizon} s < warm-up {warmup} s")]
    SteadyStateNotReached { horizon: f64, warmup: f64 },
    #[error("nodes are never within range of each other")]
    NeverInRange,
}

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<(), ModelError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<(), ModelError> {
    check_param(name, p, (0.0..=1.0).contains(&p), "must lie in [0, 1]")
}

/// Failures of the discrete-event simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
    #[error("protocol misuse: {0}")]
    ProtocolMisuse(&'static str),
    #[error("event queue went back in time: clock at {now} ns, event at {event} ns")]
    TimeRegression { now: u64, event: u64 },
}

pub(crate) fn check_scenario(field: &'static str, ok: bool, reason: impl Into<String>) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::InvalidScenario {
            field,
            reason: reason.into(),
        })
    }
}

/// A config file problem, tied to its line when there is one.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

/// Failures of the command-line subcommands; all map to exit code 2.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Config {
        path: String,
        #[source]
        source: ConfigError,
    },
    #[error("unknown protocol `{0}` (expected one of aodv, aodv_mod, dsr, dsr_mod, fsr, fsr_mod)")]
    UnknownProtocol(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: every harness error is a usage or config error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
