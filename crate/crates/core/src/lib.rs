//! Numerical simulator for error-transparent phase and idle gates on a
//! binomial-code bosonic logical qubit.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`]: dense complex linear algebra on the cavity ⊗ ancilla space.
//! * [`model`]: device parameters and every Hamiltonian used by the gates,
//!   including photon-number-resolved AC-Stark (PASS) shifts.
//! * [`code`]: the binomial code, Knill–Laflamme and error-transparency checks.
//! * [`dynamics`]: propagators, the Lindblad integrator and quantum trajectories.
//! * [`recovery`]: autonomous error correction (ideal unitary and GRAPE pulses).
//! * [`tomography`]: Wigner functions, logical process tomography and fits.
//! * [`scenarios`]: end-to-end recipes shared by the CLI and the acceptance suite.

pub mod code;
pub mod dynamics;
pub mod model;
pub mod qcore;
pub mod recovery;
pub mod scenarios;
pub mod tomography;

pub use num_complex::Complex64 as C64;
