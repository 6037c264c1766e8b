use thiserror::Error;

use crate::netmodel::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed network file at {location}: {message}")]
    Format { location: String, message: String },

    #[error("invalid network: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("partition covers {found} nodes, network has {expected}")]
    PartitionSize { expected: usize, found: usize },

    #[error("partition is not balanced")]
    Unbalanced,

    #[error("enumeration cap exceeded: largest cluster of the minimal coloring has {size} nodes (cap {cap})")]
    SizeCap { size: usize, cap: usize },

    #[error("transform invariant violated in layer {layer}: B[{row}][{col}] = {value:e}")]
    TransformInvariant {
        layer: usize,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("block row {row} is a parallel row")]
    ParallelRow { row: usize },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("model `{id}`: {message}")]
    ModelParams { id: String, message: String },

    #[error("state dimension mismatch: {0}")]
    Dimension(String),

    #[error("no step size <= {requested} aligns delays {delays:?}")]
    DelayAlignment { requested: f64, delays: Vec<f64> },

    #[error("trajectory blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("{0}")]
    Config(String),
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
