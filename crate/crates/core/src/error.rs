use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnnError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid producer parameters: {0}")]
    InvalidParams(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("calibration failed on wire `{wire}`: {reason} (values {values:?})")]
    Calibration { wire: String, reason: String, values: Vec<f64> },
    #[error("ratio overflow at ln p = {ln_p}: leisure output {leisure}")]
    RatioOverflow { ln_p: f64, leisure: f64 },
    #[error("numeric failure in producer {producer} (layer {layer}): {what}")]
    Numeric { layer: usize, producer: usize, what: String },
    #[error("round {round}: {source}")]
    Training {
        round: usize,
        #[source]
        source: Box<EnnError>,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, EnnError>;
