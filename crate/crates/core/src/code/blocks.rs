use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use super::{CodeError, CodeSpace};
use crate::qcore::{CMatrix, CVector, Operator, Subsystem};

/// `x I + z Z` (plus any transverse part) of a Hermitian 2×2 block, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDecomposition {
    pub identity: f64,
    pub z: f64,
    /// Magnitude of the off-diagonal element.
    pub transverse: f64,
}

impl BlockDecomposition {
    fn of(m: &Matrix2<C64>) -> Self {
        Self {
            identity: 0.5 * (m[(0, 0)].re + m[(1, 1)].re),
            z: 0.5 * (m[(0, 0)].re - m[(1, 1)].re),
            transverse: m[(0, 1)].norm().max(m[(1, 0)].norm()),
        }
    }
}

/// Hamiltonian projected onto the code and first error space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalBlocks {
    pub code_block: Matrix2<C64>,
    pub error_block: Matrix2<C64>,
    pub code: BlockDecomposition,
    pub error: BlockDecomposition,
    /// Largest matrix element coupling either subspace to its complement.
    pub residual: f64,
}

impl LogicalBlocks {
    /// `K′` in `K′(I − Z) + const·I` for the code block.
    pub fn k_prime(&self) -> f64 {
        -self.code.z
    }

    /// Offset between the error and code blocks.
    pub fn c(&self) -> f64 {
        self.error.identity - self.code.identity
    }
}

/// Cavity matrix of `h`; composite operators are projected onto the
/// ancilla ground manifold.
pub(crate) fn cavity_matrix(h: &Operator) -> Result<CMatrix, CodeError> {
    match h.subsystem() {
        Subsystem::Cavity => Ok(h.matrix().clone()),
        Subsystem::Composite => Ok(h.ancilla_block(0)?.into_matrix()),
        Subsystem::Ancilla => Err(CodeError::WrongSubsystem),
    }
}

pub(crate) fn block(h: &CMatrix, basis: [&CVector; 2]) -> Matrix2<C64> {
    Matrix2::from_fn(|i, j| basis[i].dotc(&(h * basis[j])))
}

/// `max |(I − P) H P|` for the projector onto `basis`.
pub(crate) fn leakage(h: &CMatrix, basis: [&CVector; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for v in basis {
        let hv = h * v;
        let mut out = hv.clone();
        for w in basis {
            let amp = w.dotc(&hv);
            out -= w * amp;
        }
        worst = worst.max(out.iter().fold(0.0, |m, z| m.max(z.norm())));
    }
    worst
}

pub fn logical_blocks(h: &Operator, code: &CodeSpace) -> Result<LogicalBlocks, CodeError> {
    h.check_hermitian().map_err(CodeError::Qcore)?;
    let m = cavity_matrix(h)?;
    let cw = [code.codewords()[0].data(), code.codewords()[1].data()];
    let ew = [code.errorwords()[0].data(), code.errorwords()[1].data()];
    let code_block = block(&m, cw);
    let error_block = block(&m, ew);
    Ok(LogicalBlocks {
        code: BlockDecomposition::of(&code_block),
        error: BlockDecomposition::of(&error_block),
        code_block,
        error_block,
        residual: leakage(&m, cw).max(leakage(&m, ew)),
    })
}
