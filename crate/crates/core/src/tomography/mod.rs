//! Wigner functions, parity post-selection, logical process tomography and
//! exponential lifetime fits.

mod fit;
mod ptm;
mod wigner;

pub use fit::{fit_exponential, ExpFit, DEPOLARIZED_FLOOR};
pub use ptm::{
    average_gate_fidelity, decode_logical, logical_ptm, logical_ptm_from_outputs, process_fidelity, ptm_phase,
    z_rotation_ptm, LogicalPtm, PauliTransferMatrix, RecoveryPolicy,
};
pub use wigner::{parity_postselect, square_grid, wigner, ParitySplit, WignerMap};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("fit needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("branch has zero probability")]
    EmptyBranch,
}
