//! Dense complex linear algebra for the cavity ⊗ ancilla Hilbert space.
//!
//! Tensor ordering is fixed everywhere: cavity first, ancilla second, so the
//! composite basis index of `|n, s⟩` is `2 * n + s` with `s = 0` for `|g⟩`
//! and `s = 1` for `|e⟩`.

mod linalg;
mod operator;
mod state;

pub use linalg::{
    commutator, dagger, eigh, expm_general, hermitian_violation, is_hermitian, matmul, max_abs,
    unitarity_violation, CMatrix, CVector,
};
pub use operator::{destroy, displacement, expm, tensor, Operator, Subsystem};
pub use state::{partial_trace_ancilla, DensityMatrix, StateVector};

use thiserror::Error;

/// Number of ancilla levels. Transmon levels above `|e⟩` are not modelled.
pub const ANCILLA_DIM: usize = 2;

/// Default cavity truncation: Fock 0–4 for the code plus headroom for leakage.
pub const DEFAULT_CAVITY_DIM: usize = 8;

/// Smallest truncation able to hold the binomial code and its error words.
pub const MIN_CODE_CAVITY_DIM: usize = 6;

pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcoreError {
    #[error("cavity dimension {0} is too small (need at least {1})")]
    CavityTooSmall(usize, usize),
    #[error("subsystem mismatch: expected {expected:?}, got {got:?}")]
    SubsystemMismatch { expected: Subsystem, got: Subsystem },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("density matrix trace {0} differs from 1")]
    BadTrace(f64),
    #[error("density matrix has eigenvalue {0:.3e} below tolerance")]
    NotPositive(f64),
}

/// Truncated cavity plus a two-level ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    cavity_dim: usize,
}

impl HilbertSpace {
    pub fn new(cavity_dim: usize) -> Result<Self, QcoreError> {
        if cavity_dim < 2 {
            return Err(QcoreError::CavityTooSmall(cavity_dim, 2));
        }
        Ok(Self { cavity_dim })
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        ANCILLA_DIM
    }

    pub fn total_dim(&self) -> usize {
        self.cavity_dim * ANCILLA_DIM
    }

    /// Composite basis index of `|n⟩ ⊗ |s⟩`.
    pub fn index(&self, n: usize, s: usize) -> usize {
        debug_assert!(n < self.cavity_dim && s < ANCILLA_DIM);
        n * ANCILLA_DIM + s
    }

    pub fn dim_of(&self, subsystem: Subsystem) -> usize {
        match subsystem {
            Subsystem::Cavity => self.cavity_dim,
            Subsystem::Ancilla => ANCILLA_DIM,
            Subsystem::Composite => self.total_dim(),
        }
    }

    pub fn require_code_capacity(&self) -> Result<(), QcoreError> {
        if self.cavity_dim < MIN_CODE_CAVITY_DIM {
            return Err(QcoreError::CavityTooSmall(self.cavity_dim, MIN_CODE_CAVITY_DIM));
        }
        Ok(())
    }
}

impl Default for HilbertSpace {
    fn default() -> Self {
        Self { cavity_dim: DEFAULT_CAVITY_DIM }
    }
}
