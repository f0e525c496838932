use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("vertex sets overlap or are empty: {0}")]
    BadVertexSets(String),

    #[error("graph on {n} vertices exceeds the exact-search limit of {limit}; use the heuristic")]
    TooLarge { n: usize, limit: usize },

    #[error("no proper colouring with colours 0..={k} found ({reason})")]
    ColouringNotFound { k: usize, reason: String },

    #[error("regular partition needs more than {cap} parts")]
    PartitionBudgetExceeded { cap: usize },

    #[error("could not group clusters into backbone columns (reduced min degree {reduced_min_degree})")]
    ColumnGroupingFailed { reduced_min_degree: usize },

    #[error("assignment failed: {item}: {detail}")]
    AssignmentFailed { item: String, detail: String },

    #[error("rebalancing cluster ({i},{j}) needs {needed} moves, budget is {budget}")]
    BudgetExceeded { i: usize, j: usize, needed: usize, budget: usize },

    #[error("no common neighbour at clique-walk step {step} for {blocking:?}")]
    NoCommonNeighbour { step: usize, blocking: Vec<usize> },

    #[error("clique walk cannot be fitted into {target} cliques (shortest found {found})")]
    WalkTooLong { target: usize, found: usize },

    #[error("no eligible pre-embedding root left in H")]
    NoEligibleRoot,

    #[error("empty candidate set for H-vertex {0}")]
    EmptyCandidates(usize),

    #[error("Γ-typicality checks failed after {0} attempts")]
    RetriesExhausted(usize),

    #[error("target minimum degree {target} exceeds δ(Γ) = {min_degree}")]
    InfeasibleTarget { target: usize, min_degree: usize },

    #[error("F self-test failed: {0}")]
    AssertionFailed(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
