use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rank must be at least 2, got {0}")]
    RankTooSmall(usize),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("edge lengths must be positive")]
    NonPositiveLength,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("edge subset contains a cycle")]
    ForestHasCycle,
    #[error("trivial word")]
    TrivialWord,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("morphism has a collapsed edge {0}")]
    CollapsedEdge(usize),
    #[error("turn is legal")]
    LegalTurn,
    #[error("iteration cap exceeded in {0}")]
    IterationCap(&'static str),
    #[error("preimage is not a forest at stage {0}")]
    PreimageNotForest(usize),
    #[error("generators generate the trivial group")]
    TrivialSubgroup,
    #[error("word is not contained in the vertex group")]
    NotInFactor,
    #[error("word is a proper power with root {root}")]
    ProperPower { root: String },
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("pair {0} of the chain is not tied within the search budget")]
    ChainBroken(usize),
    #[error("index order: {0} > {1}")]
    IndexOrder(usize, usize),
    #[error("infinite preimage")]
    InfinitePreimage,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
