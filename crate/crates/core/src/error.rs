use thiserror::Error;

/// Errors surfaced by the detection library and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation order {0} (expected 4, 16, or 64)")]
    UnsupportedOrder(usize),

    #[error("symbol is not a member of the constellation alphabet")]
    UnknownSymbol,

    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),

    #[error("bit sequence length {len} is not a multiple of {bits_per_symbol}")]
    BitLengthMismatch { len: usize, bits_per_symbol: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate channel: column {0} has zero energy")]
    DegenerateChannel(usize),

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("ML search space of {0} candidates exceeds the 2^20 cap")]
    SearchSpaceExceeded(u128),

    #[error("noise variance must be positive for the standardized cost")]
    ZeroNoiseVariance,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
