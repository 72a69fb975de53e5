use thiserror::Error;

/// Errors raised by the engine.
///
/// The coarse variants map onto the failure classes surfaced by the CLI:
/// model problems (construction, finalization, parsing, schema) versus
/// data problems (bad cells, shape mismatches, impossible evidence).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments while building a network or registering a family.
    #[error("construction error: {0}")]
    Construction(String),

    /// A network-level problem: cycles, unreachable nodes, bad weight sums.
    #[error("model error: {0}")]
    Model(String),

    /// A problem with query or training data.
    #[error("data error: {0}")]
    Data(String),

    /// DSL syntax or semantic error with source position.
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    /// JSON document does not match the network schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Code emission failed (e.g. a family without an emission handler).
    #[error("codegen error: {0}")]
    Codegen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
