use thiserror::Error;

/// Errors raised by the design and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sensor {sensor} coincides with point source {source_index}")]
    PositionOnSource { sensor: usize, source_index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "signal is linearly dependent on the noise generators and cannot be separated from them \
         (|f_perp| = {perp_norm:e}, |f_signal| = {signal_norm:e}); move or add sensors"
    )]
    SignalIndistinguishable { perp_norm: f64, signal_norm: f64 },

    #[error(
        "no noise-insensitive configuration has positive signal overlap inside the qubit budget"
    )]
    Degenerate,

    #[error("no nonzero integer configuration satisfies the noise constraints")]
    Infeasible,

    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("state not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("parity readout requires a two-branch probe (s != r)")]
    NotTwoBranch,

    #[error("site {site} eigenvalue {value} is not realizable with {qubits} qubits")]
    NonIntegerEigenvalue {
        site: usize,
        value: f64,
        qubits: u32,
    },

    #[error("alternating scenario needs an even number of sensors >= 2, got {0}")]
    OddJ(usize),

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
