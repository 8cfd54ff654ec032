//! Autonomous error correction: the ideal recovery unitary, the
//! measure-and-reset cycle, a GRAPE pulse optimizer and the repetitive
//! gate/recovery schedule.

mod aqec;
mod grape;
mod pulse;
mod schedule;

pub use aqec::{aqec_cycle, aqec_target, ideal_aqec_unitary, AqecOutcome, AqecTarget};
pub use grape::{
    aqec_grape_problem, grape_fidelity, grape_gradient, grape_optimize, GrapeOptions, GrapeProblem, GrapeResult,
    InitialPulse,
};
pub use pulse::{ControlPulse, PulseRow};
pub use schedule::{repetitive_schedule, CycleRecord, ScheduleOptions};

use thiserror::Error;

use crate::code::CodeError;
use crate::dynamics::DynamicsError;
use crate::qcore::QcoreError;

/// Duration of the optimized recovery pulse.
pub const AQEC_DURATION: f64 = 1.5e-6;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error(transparent)]
    Qcore(#[from] QcoreError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("GRAPE did not reach fidelity {target} (best {best:.6}) after {iterations} iterations")]
    NotConverged { target: f64, best: f64, iterations: usize },
    #[error("pulse file: {0}")]
    Io(String),
}
