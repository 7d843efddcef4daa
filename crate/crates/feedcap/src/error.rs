use thiserror::Error;

/// Errors surfaced by model construction, solvers and the simulator.
#[derive(Debug, Error)]
pub enum FeedcapError {
    #[error("invalid AR coefficient beta[{index}] = {value}: require |beta| < 1 and finite")]
    InvalidBeta { index: usize, value: f64 },

    #[error("invalid root parameter: {0}")]
    InvalidRoot(String),

    #[error("sample length must be >= 1, got {0}")]
    EmptySample(usize),

    #[error("series of length {len} is too short to whiten with order p = {order} (need >= p+1)")]
    SeriesTooShort { len: usize, order: usize },

    #[error("index ({i}, {j}) out of range for {m} columns")]
    IndexOutOfRange { i: usize, j: usize, m: usize },

    #[error("roots too close for the distinct-root formula (|g1 - g2| = {sep:.3e} < 1e-6); use the repeated-root form")]
    NearRepeatedRoots { sep: f64 },

    #[error("conjugate-pair evaluation produced imaginary residue {residue:.3e} (relative); parameters corrupted")]
    ImaginaryResidue { residue: f64 },

    #[error("power constraint must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("no feasible parameters found: {0}")]
    Infeasible(String),

    #[error("horizon {horizon} exceeds the overflow guard n_max = {n_max} for these roots; enable the log-domain path or shorten the horizon")]
    HorizonGuard { horizon: usize, n_max: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}
