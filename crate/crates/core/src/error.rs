use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is disconnected: no path between `{from}` and `{to}`")]
    DisconnectedGraph { from: String, to: String },

    #[error("unknown point index {index} (space has {len} points)")]
    UnknownPoint { index: usize, len: usize },

    #[error("unknown point id `{0}`")]
    UnknownPointId(String),

    #[error("metric is not symmetric: d({a},{b}) = {ab} but d({b},{a}) = {ba}")]
    Asymmetric {
        a: String,
        b: String,
        ab: f64,
        ba: f64,
    },

    #[error("metric violates positivity at ({a},{b}): distance {value}")]
    NonPositive { a: String, b: String, value: f64 },

    #[error("triangle inequality fails: d({a},{b}) = {ab} > d({a},{c}) + d({c},{b}) = {via}")]
    Triangle {
        a: String,
        b: String,
        c: String,
        ab: f64,
        via: f64,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("cell {cell} has zero total mass")]
    ZeroMassCell { cell: usize },

    #[error("mismatched inputs: {0}")]
    Mismatch(&'static str),

    #[error("inner solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        residual: f64,
        iterations: usize,
        iterate: Vec<f64>,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
