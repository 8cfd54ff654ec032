use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::linalg::{eigh, expm_general, hermitian_violation, matmul, CMatrix};
use super::{HilbertSpace, QcoreError, ANCILLA_DIM, HERMITIAN_TOL};

/// Which factor of the composite space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    Cavity,
    Ancilla,
    Composite,
}

/// A dense square operator tagged with the space and subsystem it acts on.
///
/// Hamiltonians are stored in angular frequency (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    subsystem: Subsystem,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Result<Self, QcoreError> {
        let dim = space.dim_of(subsystem);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QcoreError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        Ok(Self { space, subsystem, matrix })
    }

    /// Builds an operator that is asserted Hermitian to [`HERMITIAN_TOL`].
    pub fn hermitian(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Result<Self, QcoreError> {
        let op = Self::new(space, subsystem, matrix)?;
        op.check_hermitian()?;
        Ok(op)
    }

    pub(crate) fn from_parts(space: HilbertSpace, subsystem: Subsystem, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim_of(subsystem));
        Self { space, subsystem, matrix }
    }

    pub fn zeros(space: HilbertSpace, subsystem: Subsystem) -> Self {
        let d = space.dim_of(subsystem);
        Self::from_parts(space, subsystem, CMatrix::zeros(d, d))
    }

    pub fn identity(space: HilbertSpace, subsystem: Subsystem) -> Self {
        let d = space.dim_of(subsystem);
        Self::from_parts(space, subsystem, CMatrix::identity(d, d))
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

    pub fn check_hermitian(&self) -> Result<(), QcoreError> {
        let dev = hermitian_violation(&self.matrix);
        if dev > HERMITIAN_TOL * self.scale() {
            return Err(QcoreError::NotHermitian(dev));
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    // Relative scale for tolerance checks on Hamiltonians in rad/s.
    fn scale(&self) -> f64 {
        super::linalg::max_abs(&self.matrix).max(1.0)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.space, self.subsystem, self.matrix.adjoint())
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self, QcoreError> {
        self.require_same(rhs)?;
        Ok(Self::from_parts(self.space, self.subsystem, matmul(&self.matrix, &rhs.matrix)))
    }

    fn require_same(&self, rhs: &Operator) -> Result<(), QcoreError> {
        if self.subsystem != rhs.subsystem {
            return Err(QcoreError::SubsystemMismatch { expected: self.subsystem, got: rhs.subsystem });
        }
        if self.dim() != rhs.dim() {
            return Err(QcoreError::DimensionMismatch { expected: self.dim(), got: rhs.dim() });
        }
        Ok(())
    }

    /// Embeds a cavity or ancilla operator into the composite space.
    pub fn on_composite(&self) -> Self {
        match self.subsystem {
            Subsystem::Composite => self.clone(),
            Subsystem::Cavity => tensor(self, &Self::identity(self.space, Subsystem::Ancilla))
                .expect("cavity ⊗ ancilla identity"),
            Subsystem::Ancilla => tensor(&Self::identity(self.space, Subsystem::Cavity), self)
                .expect("cavity identity ⊗ ancilla"),
        }
    }

    /// `⟨s|O|s⟩` on the cavity factor for a composite operator.
    pub fn ancilla_block(&self, s: usize) -> Result<Self, QcoreError> {
        if self.subsystem != Subsystem::Composite {
            return Err(QcoreError::SubsystemMismatch { expected: Subsystem::Composite, got: self.subsystem });
        }
        let d = self.space.cavity_dim();
        let m = CMatrix::from_fn(d, d, |i, j| self.matrix[(i * ANCILLA_DIM + s, j * ANCILLA_DIM + s)]);
        Ok(Self::from_parts(self.space, Subsystem::Cavity, m))
    }

    // --- cavity factor -------------------------------------------------

    pub fn cavity_destroy(space: HilbertSpace) -> Self {
        let d = space.cavity_dim();
        let mut m = CMatrix::zeros(d, d);
        for n in 1..d {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self::from_parts(space, Subsystem::Cavity, m)
    }

    pub fn cavity_number(space: HilbertSpace) -> Self {
        Self::cavity_diagonal(space, |n| n as f64)
    }

    /// Diagonal cavity operator `Σ f(n) |n⟩⟨n|`.
    pub fn cavity_diagonal(space: HilbertSpace, f: impl Fn(usize) -> f64) -> Self {
        let d = space.cavity_dim();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(f(i), 0.0) } else { C64::new(0.0, 0.0) });
        Self::from_parts(space, Subsystem::Cavity, m)
    }

    /// Photon-number parity `(−1)^{a†a}`.
    pub fn cavity_parity(space: HilbertSpace) -> Self {
        Self::cavity_diagonal(space, |n| if n % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn cavity_projector(space: HilbertSpace, n: usize) -> Self {
        Self::cavity_diagonal(space, |k| if k == n { 1.0 } else { 0.0 })
    }

    // --- ancilla factor ------------------------------------------------

    fn ancilla_from(space: HilbertSpace, entries: [[C64; 2]; 2]) -> Self {
        let m = CMatrix::from_fn(2, 2, |i, j| entries[i][j]);
        Self::from_parts(space, Subsystem::Ancilla, m)
    }

    /// `σ₋ = |g⟩⟨e|`.
    pub fn ancilla_lowering(space: HilbertSpace) -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::ancilla_from(space, [[o, l], [o, o]])
    }

    /// `σ₊ = |e⟩⟨g|`.
    pub fn ancilla_raising(space: HilbertSpace) -> Self {
        Self::ancilla_lowering(space).adjoint()
    }

    /// `|e⟩⟨e|`.
    pub fn ancilla_excited(space: HilbertSpace) -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::ancilla_from(space, [[o, o], [o, l]])
    }

    /// `|g⟩⟨g|`.
    pub fn ancilla_ground(space: HilbertSpace) -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::ancilla_from(space, [[l, o], [o, o]])
    }

    pub fn sigma_x(space: HilbertSpace) -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::ancilla_from(space, [[o, l], [l, o]])
    }

    pub fn sigma_y(space: HilbertSpace) -> Self {
        let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        Self::ancilla_from(space, [[o, -i], [i, o]])
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.require_same(rhs).expect("operator sum");
        Operator::from_parts(self.space, self.subsystem, &self.matrix + &rhs.matrix)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.require_same(rhs).expect("operator difference");
        Operator::from_parts(self.space, self.subsystem, &self.matrix - &rhs.matrix)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_parts(self.space, self.subsystem, -&self.matrix)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator::from_parts(self.space, self.subsystem, &self.matrix * C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator::from_parts(self.space, self.subsystem, &self.matrix * rhs)
    }
}

/// Annihilation operator `a ⊗ I` on the composite space.
pub fn destroy(space: HilbertSpace) -> Operator {
    Operator::cavity_destroy(space).on_composite()
}

/// Kronecker product in cavity ⊗ ancilla order.
pub fn tensor(cavity: &Operator, ancilla: &Operator) -> Result<Operator, QcoreError> {
    if cavity.subsystem != Subsystem::Cavity {
        return Err(QcoreError::SubsystemMismatch { expected: Subsystem::Cavity, got: cavity.subsystem });
    }
    if ancilla.subsystem != Subsystem::Ancilla {
        return Err(QcoreError::SubsystemMismatch { expected: Subsystem::Ancilla, got: ancilla.subsystem });
    }
    if cavity.space != ancilla.space {
        return Err(QcoreError::DimensionMismatch {
            expected: cavity.space.cavity_dim(),
            got: ancilla.space.cavity_dim(),
        });
    }
    Ok(Operator::from_parts(cavity.space, Subsystem::Composite, cavity.matrix.kronecker(&ancilla.matrix)))
}

/// `exp(−i H t)` for Hermitian `H`, via eigendecomposition.
///
/// Diagonal inputs are exponentiated entrywise so the result is exact.
pub fn expm(h: &Operator, t: f64) -> Result<Operator, QcoreError> {
    h.check_hermitian()?;
    Ok(Operator::from_parts(h.space, h.subsystem, unitary_exp(&h.matrix, t)))
}

pub(crate) fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || h[(i, j)] == C64::new(0.0, 0.0)));
    if is_diagonal {
        return CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::from_polar(1.0, -h[(i, i)].re * t)
            } else {
                C64::new(0.0, 0.0)
            }
        });
    }
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * t);
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    matmul(&scaled, &vectors.adjoint())
}

impl Operator {
    /// `exp(−i M t)` for a general, possibly non-Hermitian generator, such as
    /// the no-jump effective Hamiltonian. The result is not unitary.
    pub fn expm_nonunitary(&self, t: f64) -> Operator {
        Operator::from_parts(self.space, self.subsystem, expm_general(&self.matrix, C64::new(0.0, -t)))
    }
}

/// Cavity displacement `D(α) = exp(α a† − α* a)`.
pub fn displacement(space: HilbertSpace, alpha: C64) -> Operator {
    let d = space.cavity_dim();
    if alpha.norm_sqr() > d as f64 / 4.0 {
        log::warn!("displacement |alpha|^2 = {:.2} is large for cavity_dim {}", alpha.norm_sqr(), d);
    }
    let a = Operator::cavity_destroy(space);
    // α a† − α* a = −i H with H = i(α a† − α* a) Hermitian.
    let gen = a.matrix.adjoint() * alpha - &a.matrix * alpha.conj();
    let h = gen * C64::new(0.0, 1.0);
    Operator::from_parts(space, Subsystem::Cavity, unitary_exp(&h, 1.0))
}
