use thiserror::Error;

/// Errors surfaced by ingestion, matrix construction, and the clustering
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("case file schema violation: {0}")]
    CaseSchema(String),

    #[error("duplicate bus label {0:?}")]
    DuplicateBusLabel(String),

    #[error("unknown bus {0:?}")]
    UnknownBus(String),

    #[error("branch {from:?}-{to:?} is a self-loop")]
    SelfLoop { from: String, to: String },

    #[error("branch {from:?}-{to:?} has negative resistance")]
    NegativeResistance { from: String, to: String },

    #[error("branch {from:?}-{to:?} has zero impedance (R, X) = (0, 0)")]
    ZeroImpedance { from: String, to: String },

    #[error("measurement file schema violation: {0}")]
    MeasurementSchema(String),

    #[error("non-uniform timestep in series for bus {bus:?}: step {step} deviates from {reference}")]
    NonUniformTimestep {
        bus: String,
        step: f64,
        reference: f64,
    },

    #[error("series for bus {0:?} has fewer than 2 samples")]
    TooFewSamples(String),

    #[error("measurement series do not cover the same time window: {0}")]
    InconsistentWindow(String),

    #[error("no outage target: no in-service branch joins {from:?} and {to:?}")]
    NoSuchBranch { from: String, to: String },

    #[error("branch {from:?}-{to:?} has no power-flow values")]
    MissingFlows { from: String, to: String },

    #[error("deviation vectors have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("coherency layer requested but no measurement series for bus(es): {0}")]
    MissingSeries(String),

    #[error("coherency layer requested but no measurements were provided")]
    MissingMeasurements,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvalue sequence is not sorted ascending at index {0}")]
    UnsortedEigenvalues(usize),

    #[error("empty eigengap search range [{k_min}, {k_max}] for spectrum of size {n}")]
    EmptySearchRange { k_min: usize, k_max: usize, n: usize },

    #[error("eigendecomposition failed to converge")]
    EigenConvergence,

    #[error("eigendecomposition residual {residual:e} exceeds tolerance {tolerance:e}")]
    EigenResidual { residual: f64, tolerance: f64 },

    #[error("embedding dimension k={k} out of range 1..={n}")]
    EmbeddingDim { k: usize, n: usize },

    #[error("infeasible island count k={k}: feasible range is {min}..={max}")]
    InfeasibleK { k: usize, min: usize, max: usize },

    #[error("island is empty")]
    EmptyIsland,

    #[error("brute-force partition enumeration limited to n <= {limit}, got n = {n}")]
    BruteForceTooLarge { n: usize, limit: usize },

    #[error("swing configuration invalid: {0}")]
    SwingConfig(String),

    #[error("simulation diverged at t = {time} s (non-finite state); reduce dt")]
    Unstable { time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
