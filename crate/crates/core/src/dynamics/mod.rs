//! Time evolution: unitary propagators, a fixed-step Lindblad integrator,
//! Monte-Carlo trajectories and the jump-conditioned tracks used to test
//! error transparency.
//!
//! Density matrices are vectorized column-stacked: `ρ_ij ↦ i + j·d`.

mod collapse;
mod lindblad;
mod superop;
mod tracks;
mod trajectory;

pub use collapse::{cavity_dephasing, CollapseSet};
pub use lindblad::{lindblad_evolve, EvolutionResult, EvolveOptions};
pub use superop::{Evolver, Generator, Superop};
pub use tracks::{conditioned_jump_track, no_jump_map, propagator, JumpTrack};
pub use trajectory::{seed_for, trajectory_ensemble, trajectory_run, EnsembleResult, Jump, TrajectoryResult};

use thiserror::Error;

use crate::qcore::QcoreError;

/// Largest allowed `dt · ‖H‖` for the RK4 integrator.
pub const MAX_PHASE_PER_STEP: f64 = 0.05;

/// Default integration step.
pub const DEFAULT_DT: f64 = 0.5e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step {dt:.3e} s too large: dt*|H| = {phase:.3e} exceeds {max}")]
    StepTooLarge { dt: f64, phase: f64, max: f64 },
    #[error("negative duration {0}")]
    NegativeTime(f64),
    #[error("jump time {t_jump} outside [0, {total}]")]
    JumpOutOfRange { t_jump: f64, total: f64 },
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}
