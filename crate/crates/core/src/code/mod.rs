//! The binomial code, its single-photon-loss error space, Knill–Laflamme
//! verification and the error-transparency check on projected Hamiltonians.

mod blocks;
mod codespace;
mod et;

pub use blocks::{logical_blocks, BlockDecomposition, LogicalBlocks};
pub use codespace::{binomial_code, kl_check, CodeSpace, KlReport};
pub use et::{choose_frame_offset, et_check, et_check_segments, EtReport, DEFAULT_ET_TOL};

use thiserror::Error;

use crate::qcore::QcoreError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error(transparent)]
    Qcore(#[from] QcoreError),
    #[error("codewords are not orthonormal (overlap {0:.3e})")]
    NotOrthogonal(f64),
    #[error("error {0} annihilates the code space")]
    DegenerateError(usize),
    #[error("operator must act on the cavity or composite space")]
    WrongSubsystem,
}
