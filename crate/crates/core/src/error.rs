use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("degree order {order} outside [1, {max}]")]
    InvalidDegreeOrder { order: usize, max: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("vertex set of size {size} is smaller than the uniformity {r}")]
    TooSmall { size: usize, r: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("{n} is not divisible by {by}")]
    Indivisible { n: usize, by: usize },
    #[error("target minimum degree {target} is unreachable (max {max})")]
    Infeasible { target: u64, max: u64 },
    #[error("sets are not disjoint")]
    NotDisjoint,
    #[error("link graph has {edges} edges, classification needs at least 37")]
    NotApplicable { edges: u32 },
    #[error("classification lemma violated by link graph {0:016x}")]
    LemmaViolation(u64),
    #[error("empty input")]
    EmptyInput,
    #[error("density {found} is below the required {required}")]
    InsufficientDensity { found: String, required: String },
    #[error("no absorber found for {0:?}")]
    AbsorptionFailed(Vec<usize>),
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
