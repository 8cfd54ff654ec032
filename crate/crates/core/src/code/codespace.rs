use num_complex::Complex64 as C64;

use super::CodeError;
use crate::qcore::{CMatrix, CVector, HilbertSpace, Operator, StateVector, Subsystem};

/// A two-dimensional cavity code with one error space per correctable error.
#[derive(Debug, Clone)]
pub struct CodeSpace {
    space: HilbertSpace,
    codewords: [StateVector; 2],
    errorwords: [StateVector; 2],
    errors: Vec<Operator>,
    alphas: Vec<f64>,
    p_code: Operator,
    /// `P_j = E_j P_C / √α_j`, so that `P_j† P_j = P_C`.
    p_errors: Vec<Operator>,
}

fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

impl CodeSpace {
    /// Builds a code from two orthonormal cavity codewords and an error set.
    /// The error words are the normalized images of the codewords under the
    /// first error.
    pub fn from_words(
        space: HilbertSpace,
        codewords: [StateVector; 2],
        errors: Vec<Operator>,
    ) -> Result<Self, CodeError> {
        for w in &codewords {
            if w.subsystem() != Subsystem::Cavity {
                return Err(CodeError::WrongSubsystem);
            }
        }
        let overlap = codewords[0].inner(&codewords[1]).norm();
        if overlap > 1e-10 {
            return Err(CodeError::NotOrthogonal(overlap));
        }
        let p_code_m = outer(codewords[0].data(), codewords[0].data()) + outer(codewords[1].data(), codewords[1].data());
        let p_code = Operator::new(space, Subsystem::Cavity, p_code_m)?;
        let mut alphas = Vec::with_capacity(errors.len());
        let mut p_errors = Vec::with_capacity(errors.len());
        for (j, e) in errors.iter().enumerate() {
            if e.subsystem() != Subsystem::Cavity {
                return Err(CodeError::WrongSubsystem);
            }
            let block = e.adjoint().compose(e)?;
            let alpha = 0.5
                * (codewords[0].data().dotc(&(block.matrix() * codewords[0].data())).re
                    + codewords[1].data().dotc(&(block.matrix() * codewords[1].data())).re);
            if alpha <= 1e-14 {
                return Err(CodeError::DegenerateError(j));
            }
            let pj = e.compose(&p_code)?;
            p_errors.push(&pj * (1.0 / alpha.sqrt()));
            alphas.push(alpha);
        }
        let first = errors.first().ok_or(CodeError::DegenerateError(0))?;
        let image = |w: &StateVector| StateVector::normalized(space, Subsystem::Cavity, w.apply_raw(first));
        let errorwords = [image(&codewords[0])?, image(&codewords[1])?];
        Ok(Self { space, codewords, errorwords, errors, alphas, p_code, p_errors })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn codewords(&self) -> &[StateVector; 2] {
        &self.codewords
    }

    pub fn errorwords(&self) -> &[StateVector; 2] {
        &self.errorwords
    }

    pub fn errors(&self) -> &[Operator] {
        &self.errors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn p_code(&self) -> &Operator {
        &self.p_code
    }

    pub fn p_errors(&self) -> &[Operator] {
        &self.p_errors
    }

    /// Projector onto the span of the error words.
    pub fn p_error_space(&self) -> Operator {
        let m = outer(self.errorwords[0].data(), self.errorwords[0].data())
            + outer(self.errorwords[1].data(), self.errorwords[1].data());
        Operator::new(self.space, Subsystem::Cavity, m).expect("cavity dimension")
    }

    /// `c₀|0_L⟩ + c₁|1_L⟩`, normalized.
    pub fn logical_state(&self, c0: C64, c1: C64) -> StateVector {
        let v = self.codewords[0].data() * c0 + self.codewords[1].data() * c1;
        StateVector::normalized(self.space, Subsystem::Cavity, v).expect("nonzero logical amplitudes")
    }

    /// `c₀|0_E⟩ + c₁|1_E⟩`, normalized.
    pub fn error_state(&self, c0: C64, c1: C64) -> StateVector {
        let v = self.errorwords[0].data() * c0 + self.errorwords[1].data() * c1;
        StateVector::normalized(self.space, Subsystem::Cavity, v).expect("nonzero logical amplitudes")
    }

    /// The six cardinal states `|±Z⟩, |±X⟩, |±Y⟩` as logical amplitudes.
    pub fn cardinal_amplitudes() -> [(C64, C64); 6] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        [
            (l, o),
            (o, l),
            (C64::new(h, 0.0), C64::new(h, 0.0)),
            (C64::new(h, 0.0), C64::new(-h, 0.0)),
            (C64::new(h, 0.0), C64::new(0.0, h)),
            (C64::new(h, 0.0), C64::new(0.0, -h)),
        ]
    }

    pub fn cardinal_states(&self) -> Vec<StateVector> {
        Self::cardinal_amplitudes().iter().map(|(a, b)| self.logical_state(*a, *b)).collect()
    }
}

/// `|0_L⟩ = (|0⟩+|4⟩)/√2`, `|1_L⟩ = |2⟩`, error set `{a}`.
pub fn binomial_code(space: HilbertSpace) -> Result<CodeSpace, CodeError> {
    space.require_code_capacity()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut zero = CVector::zeros(space.cavity_dim());
    zero[0] = C64::new(h, 0.0);
    zero[4] = C64::new(h, 0.0);
    let zero = StateVector::new(space, Subsystem::Cavity, zero)?;
    let one = StateVector::fock(space, 2);
    CodeSpace::from_words(space, [zero, one], vec![Operator::cavity_destroy(space)])
}

/// Knill–Laflamme test of `P_C E†E P_C = α P_C` for each error.
#[derive(Debug, Clone, PartialEq)]
pub struct KlReport {
    /// Mean of the two diagonal entries of the code block.
    pub alphas: Vec<f64>,
    /// Largest of the off-diagonal magnitude and the diagonal spread.
    pub violation: f64,
}

pub fn kl_check(code: &CodeSpace, errors: &[Operator]) -> Result<KlReport, CodeError> {
    let w = code.codewords();
    let mut alphas = Vec::with_capacity(errors.len());
    let mut violation: f64 = 0.0;
    for e in errors {
        let ee = e.adjoint().compose(e)?;
        let b = |i: usize, j: usize| w[i].data().dotc(&(ee.matrix() * w[j].data()));
        let (b00, b11, b01) = (b(0, 0).re, b(1, 1).re, b(0, 1).norm());
        alphas.push(0.5 * (b00 + b11));
        violation = violation.max(b01).max((b00 - b11).abs());
    }
    Ok(KlReport { alphas, violation })
}
