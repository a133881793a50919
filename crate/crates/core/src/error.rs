use thiserror::Error;

use crate::params::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested quantity belongs to a scenario with zero probability
    /// (for example the all-success rate when no discovery trial fits in `t`).
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound} after {intervals} intervals")]
    QuadratureNonConvergence {
        estimate: f64,
        error_bound: f64,
        intervals: usize,
    },

    #[error("no route from {origin} to {destination}")]
    NoRoute { origin: NodeId, destination: NodeId },

    #[error("perimeter forwarding revisited edge {from} -> {to}")]
    LoopDetected { from: NodeId, to: NodeId },

    #[error("unknown broadcast scheme `{0}`")]
    UnknownScheme(String),

    #[error("invalid beam count {beams} for scheme {scheme}")]
    InvalidBeams { scheme: String, beams: u32 },

    #[error("invalid grid dimensions {rows}x{cols}")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
