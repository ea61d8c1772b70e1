use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: argument {value} is outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} is out of range for an exponent map of {len} nodes")]
    NodeOutOfRange { node: usize, len: usize },

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("conjugate search window exhausted: maximizer for s = {s} reached t_max = {t_max}")]
    WindowExhausted { s: f64, t_max: f64 },

    #[error("index ratio t·φ/Φ = {ratio} ≤ 1 at node {node}, t = {t}")]
    IndexViolation { node: usize, t: f64, ratio: f64 },

    #[error("Luxemburg bracket not found after {0} scalings")]
    LuxemburgOverflow(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no negative energy found along the direction after {0} halvings")]
    NoNegativeDirection(usize),

    #[error("line search failed on rung {rung} at iteration {iter} (step {step:e}, J = {energy})")]
    LineSearch {
        rung: usize,
        iter: usize,
        step: f64,
        energy: f64,
        last_iterate: Vec<f64>,
    },

    #[error("energy increased on rung {rung}: {before} -> {after}")]
    EnergyIncrease { rung: usize, before: f64, after: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            expected,
        }
    }
}
