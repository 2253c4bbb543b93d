use thiserror::Error;

/// Errors produced by the partitioning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("negative capacity {capacity} on edge ({tail}, {head})")]
    NegativeCapacity { tail: usize, head: usize, capacity: f64 },
    #[error("node {0} out of range (network has {1} nodes)")]
    UnknownNode(usize, usize),
    #[error("node {0} is not a border node")]
    NotBorder(usize),
    #[error("VPN {0:?} hosts unknown or non-border node {1}")]
    BadHosting(String, usize),
    #[error("duplicate VPN name {0:?}")]
    DuplicateVpn(String),
    #[error("unknown VPN {0:?}")]
    UnknownVpn(String),
    #[error("source and destination must differ (got {0})")]
    SelfPair(usize),
    #[error("residual update out of range on edge ({tail}, {head}): {detail}")]
    ResidualRange { tail: usize, head: usize, detail: String },
    #[error("could not reach target average degree {target} after {attempts} attempts")]
    DegreeTarget { target: f64, attempts: usize },
    #[error("oversubscription factor must be >= 1 (got {0})")]
    BadOversubscription(f64),
    #[error("linear program is malformed: {0}")]
    MalformedProgram(String),
    #[error("instance too large for the exact solver: {0}")]
    SizeGuard(String),
    #[error("commodity {0} has zero max flow; prune it before solving")]
    ZeroMaxFlow(usize),
    #[error("demand for commodity {0} must be positive (got {1})")]
    NonPositiveDemand(usize, f64),
    #[error("flow solution violates conservation for commodity {commodity} at node {node} (imbalance {imbalance})")]
    Conservation { commodity: usize, node: usize, imbalance: f64 },
    #[error("path decomposition does not match the flow solution: {0}")]
    InconsistentPaths(String),
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
