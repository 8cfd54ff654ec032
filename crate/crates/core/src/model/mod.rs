//! Device parameters and the Hamiltonians of the dispersive cavity-ancilla
//! system, including photon-number-resolved AC-Stark (PASS) shifts.
//!
//! Sign conventions: `chi > 0` and the ancilla transition with `n` photons
//! sits at `ω_q − nχ`. A drive with detuning `delta_d = ω_d − ω_q` has
//! per-Fock detuning `Δ_n = delta_d + nχ`.

mod calibration;
mod feasibility;
mod hamiltonian;
mod params;
mod shifts;

pub use calibration::{
    calibrate_et_idle, calibrate_et_phase, calibrate_table_fit, Calibration, CalibrationMode,
};
pub use feasibility::{pass_feasibility, FeasibilityReport};
pub use hamiltonian::{build_driven_h, build_h0, effective_cavity_h, DrivenHamiltonian};
pub use params::{hz, to_hz, DeviceParams, DriveSpec, NoiseParams, TWO_PI};
pub use shifts::{
    dressed_shift, fock_frequencies, induced_dephasing, pass_shift_table, PassShiftTable, ShiftMethod,
};

use thiserror::Error;

use crate::qcore::QcoreError;

/// Largest Fock number carried by the binomial code.
pub const N_TRC: usize = 4;

/// Drives closer than this many Rabi amplitudes to a number-split line are rejected.
pub const RESONANCE_MARGIN: f64 = 3.0;

/// Upper bound on the drive amplitude in units of `chi`.
pub const MAX_OMEGA_OVER_CHI: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("drive {drive} resonant with Fock {n}: detuning {delta_n:.4e} rad/s within {margin:.4e}")]
    Resonance { drive: usize, n: usize, delta_n: f64, margin: f64 },
    #[error("drive {drive} amplitude {omega:.4e} rad/s exceeds 0.3 chi")]
    DriveTooStrong { drive: usize, omega: f64 },
    #[error("at most two simultaneous drives are supported, got {0}")]
    TooManyDrives(usize),
    #[error("calibration did not converge: {0}")]
    Calibration(String),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}
