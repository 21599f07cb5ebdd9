use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AigError {
    #[error("malformed AIGER header: {0}")]
    MalformedHeader(String),
    #[error("sequential AIGER (latch count {0}) is not supported")]
    UnsupportedSequential(usize),
    #[error("literal {literal} references undefined variable {variable}")]
    UndefinedVariable { literal: u64, variable: u64 },
    #[error("cyclic definition through variable {0}")]
    Cycle(u64),
    #[error("malformed AIGER body at line {line}: {msg}")]
    MalformedBody { line: usize, msg: String },
    #[error("truncated binary AND section at gate {0}")]
    TruncatedDelta(usize),
    #[error("binary AND gate {gate}: {msg}")]
    InvalidDelta { gate: usize, msg: String },
    #[error("circuit exceeds AIGER format limits: {0}")]
    FormatLimit(String),
    #[error("node {node}: {kind} node has {found} fanins, expected {expected}")]
    Arity { node: usize, kind: &'static str, found: usize, expected: usize },
    #[error("node {node}: fanin {fanin} does not exist")]
    DanglingFanin { node: usize, fanin: usize },
    #[error("cycle detected through node {0}")]
    CycleDetected(usize),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("stimulus width mismatch: expected {expected} patterns, got {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("stimulus covers {found} inputs, circuit has {expected}")]
    StimulusCount { expected: usize, found: usize },
    #[error("exhaustive enumeration over {pis} inputs exceeds the cap of {cap}")]
    CapExceeded { pis: usize, cap: usize },
    #[error("truth table length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid truth table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    #[error("segment id {id} out of range for {segments} segments")]
    SegmentOutOfRange { id: usize, segments: usize },
    #[error("index {index} out of range for {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
    #[error("backward root must be a 1x1 scalar, got {0:?}")]
    NonScalarRoot((usize, usize)),
    #[error("backward root is not on this tape")]
    DetachedRoot,
    #[error("backward already ran on this tape")]
    BackwardTwice,
    #[error("invalid backward order: {0}")]
    InvalidOrder(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("feature width {found} does not match configured d0 {expected}")]
    FeatureWidth { expected: usize, found: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid split ratios: {0}")]
    Ratios(String),
    #[error("missing labels for circuit {0}")]
    MissingLabels(String),
    #[error("labels for {circuit} cover {found} nodes, circuit has {expected}")]
    LabelMismatch { circuit: String, expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
}
