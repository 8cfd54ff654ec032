use num_complex::Complex64 as C64;

use super::linalg::{eigh, hermitian_violation, matmul, CMatrix, CVector};
use super::{HilbertSpace, Operator, QcoreError, Subsystem, ANCILLA_DIM};

const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-9;

/// Normalized pure state on a cavity, ancilla or composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    subsystem: Subsystem,
    data: CVector,
}

impl StateVector {
    pub fn new(space: HilbertSpace, subsystem: Subsystem, data: CVector) -> Result<Self, QcoreError> {
        let dim = space.dim_of(subsystem);
        if data.len() != dim {
            return Err(QcoreError::DimensionMismatch { expected: dim, got: data.len() });
        }
        let norm = data.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QcoreError::NotNormalized(norm));
        }
        Ok(Self { space, subsystem, data })
    }

    /// Normalizes `data` first. Fails on a zero vector.
    pub fn normalized(space: HilbertSpace, subsystem: Subsystem, data: CVector) -> Result<Self, QcoreError> {
        let norm = data.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QcoreError::NotNormalized(norm));
        }
        Self::new(space, subsystem, data.unscale(norm))
    }

    pub fn basis(space: HilbertSpace, subsystem: Subsystem, index: usize) -> Self {
        let mut data = CVector::zeros(space.dim_of(subsystem));
        data[index] = C64::new(1.0, 0.0);
        Self { space, subsystem, data }
    }

    pub fn fock(space: HilbertSpace, n: usize) -> Self {
        Self::basis(space, Subsystem::Cavity, n)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn subsystem(&self) -> Subsystem {
        self.subsystem
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    /// Product state `cavity ⊗ ancilla`.
    pub fn tensor(cavity: &StateVector, ancilla: &StateVector) -> Result<Self, QcoreError> {
        if cavity.subsystem != Subsystem::Cavity || ancilla.subsystem != Subsystem::Ancilla {
            return Err(QcoreError::SubsystemMismatch { expected: Subsystem::Cavity, got: cavity.subsystem });
        }
        Ok(Self {
            space: cavity.space,
            subsystem: Subsystem::Composite,
            data: cavity.data.kronecker(&ancilla.data),
        })
    }

    /// Cavity state times the ancilla ground state.
    pub fn with_ancilla_ground(&self) -> Self {
        let g = StateVector::basis(self.space, Subsystem::Ancilla, 0);
        Self::tensor(self, &g).expect("cavity state")
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.data.dotc(&other.data)
    }

    /// Applies `op` without renormalizing; returns the raw vector.
    pub fn apply_raw(&self, op: &Operator) -> CVector {
        assert_eq!(op.subsystem(), self.subsystem, "operator/state subsystem mismatch");
        op.matrix() * &self.data
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.data * self.data.adjoint();
        DensityMatrix { space: self.space, subsystem: self.subsystem, matrix: m }
    }
}

/// Density matrix with validated trace, Hermiticity and positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    subsystem: Subsystem,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Result<Self, QcoreError> {
        let dim = space.dim_of(subsystem);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QcoreError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QcoreError::BadTrace(tr.re));
        }
        let herm = hermitian_violation(&matrix);
        if herm > TRACE_TOL {
            return Err(QcoreError::NotHermitian(herm));
        }
        let (values, _) = eigh(&matrix);
        if values[0] < -POSITIVITY_TOL {
            return Err(QcoreError::NotPositive(values[0]));
        }
        Ok(Self { space, subsystem, matrix })
    }

    /// Wraps a matrix produced by a trusted channel without revalidation.
    pub(crate) fn from_raw(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Self {
        Self { space, subsystem, matrix }
    }

    /// Divides by the trace. Returns `None` for a zero-weight matrix.
    pub fn from_unnormalized(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Option<Self> {
        let tr = matrix.trace().re;
        if tr <= 1e-14 {
            return None;
        }
        Some(Self { space, subsystem, matrix: matrix.unscale(tr) })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn subsystem(&self) -> Subsystem {
        self.subsystem
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &Operator) -> f64 {
        assert_eq!(op.subsystem(), self.subsystem, "operator/state subsystem mismatch");
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += op.matrix()[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_pure(&self, psi: &StateVector) -> f64 {
        let v = &self.matrix * psi.data();
        psi.data().dotc(&v).re
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let m = matmul(&matmul(u, &self.matrix), &u.adjoint());
        Self::from_raw(self.space, self.subsystem, m)
    }

    /// `ρ ⊗ |g⟩⟨g|` for a cavity state.
    pub fn with_ancilla_ground(&self) -> Self {
        assert_eq!(self.subsystem, Subsystem::Cavity);
        let mut g = CMatrix::zeros(ANCILLA_DIM, ANCILLA_DIM);
        g[(0, 0)] = C64::new(1.0, 0.0);
        Self::from_raw(self.space, Subsystem::Composite, self.matrix.kronecker(&g))
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.matrix - &other.matrix;
        let (values, _) = eigh(&diff);
        0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Traces out the ancilla of a composite density matrix.
pub fn partial_trace_ancilla(rho: &DensityMatrix) -> Result<DensityMatrix, QcoreError> {
    if rho.subsystem != Subsystem::Composite {
        return Err(QcoreError::SubsystemMismatch { expected: Subsystem::Composite, got: rho.subsystem });
    }
    let d = rho.space.cavity_dim();
    let m = CMatrix::from_fn(d, d, |i, j| {
        (0..ANCILLA_DIM).map(|s| rho.matrix[(i * ANCILLA_DIM + s, j * ANCILLA_DIM + s)]).sum()
    });
    Ok(DensityMatrix::from_raw(rho.space, Subsystem::Cavity, m))
}
