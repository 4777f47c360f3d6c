use alloc::string::String;

/// Errors produced by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("scheduling window [{needed_start}, {needed_end}] not covered by trajectory [{available_start}, {available_end}]")]
    WindowOutOfRange {
        needed_start: i64,
        needed_end: i64,
        available_start: i64,
        available_end: i64,
    },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("intervals are not adjacent: left ends at {left_end}, right starts at {right_start}")]
    NonAdjacentIntervals { left_end: i64, right_start: i64 },
    #[error("time intervals differ: [{a_start}, {a_end}] vs [{b_start}, {b_end}]")]
    IntervalMismatch {
        a_start: i64,
        a_end: i64,
        b_start: i64,
        b_end: i64,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("observability evaluation over {steps} steps (lag bound {lag_bound}) has rank {rank}, {required} required (smallest singular value {sigma_min:e})")]
    RankDeficientObservability {
        steps: usize,
        lag_bound: usize,
        rank: usize,
        required: usize,
        sigma_min: f64,
    },
    #[error("trajectory inconsistent with the model: residual {residual:e} exceeds {tol:e}")]
    InconsistentTrajectory { residual: f64, tol: f64 },
    #[error(
        "query is not consistent with the data behavior: residual {residual:e} exceeds {tol:e}"
    )]
    Infeasible { residual: f64, tol: f64 },
    #[error("output continuation is not uniquely determined: margin {margin:e} <= {tol:e}")]
    Ambiguous { margin: f64, tol: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
