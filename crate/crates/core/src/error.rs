use thiserror::Error;

/// Errors raised by the link simulator and metrology routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape error: {0}")]
    InputShape(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible SINR target: {0}")]
    Infeasible(String),

    #[error("undefined SINR: interference-plus-noise power is zero")]
    UndefinedSinr,

    #[error("degenerate channel: combining gain is zero")]
    DegenerateChannel,

    #[error("channel estimation error: {0}")]
    Estimation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("format error in column `{column}`: {message}")]
    Format { column: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
