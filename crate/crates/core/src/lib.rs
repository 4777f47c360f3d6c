#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod ddpred;
pub mod error;
pub mod linalg;
pub mod models;
pub mod random;
pub mod schedcalc;
pub mod signals;
pub mod simulation;

pub use ddpred::{
    DataRecord, PredictMethod, PredictOptions, PredictionResult, Query, Route, Verdict,
};
pub use error::{Error, Result};
pub use models::{
    example_verhoek, io_to_kernel, KernelRep, LpvIoModel, LpvSsModel, ValidationReport, Violation,
};
pub use schedcalc::{CoeffMatrix, Monomial, PolyCoeff, SchedVar, Term};
pub use signals::{sched_block_diag, HankelMatrix, Trajectory};
