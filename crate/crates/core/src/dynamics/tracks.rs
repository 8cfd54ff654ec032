use num_complex::Complex64 as C64;

use super::DynamicsError;
use crate::code::CodeSpace;
use crate::qcore::{expm, matmul, CMatrix, HilbertSpace, Operator, QcoreError, StateVector, Subsystem};

/// Time-ordered product of segment exponentials; the first segment acts first.
pub fn propagator(segments: &[(Operator, f64)]) -> Result<Operator, QcoreError> {
    let first = segments.first().ok_or(QcoreError::DimensionMismatch { expected: 1, got: 0 })?;
    let mut u = Operator::identity(first.0.space(), first.0.subsystem());
    for (h, dur) in segments {
        let step = expm(h, *dur)?;
        u = step.compose(&u)?;
    }
    Ok(u)
}

/// No-jump distortion `e^{−κ_a a†a t / 2}` on the cavity.
pub fn no_jump_map(space: HilbertSpace, kappa_a: f64, t: f64) -> Operator {
    Operator::cavity_diagonal(space, |n| (-0.5 * kappa_a * n as f64 * t).exp())
}

/// Comparison of a trajectory with an error at `t_jump` against the same
/// error applied at the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpTrack {
    pub overlap_modulus: f64,
    /// `arg ⟨ref|track⟩`, radians.
    pub phase: f64,
}

/// For each of the six cardinal logical states `|ψ⟩`, compares
/// `U(T,t) E U(t,0) |ψ⟩` with `E U(T,0) |ψ⟩`, both normalized.
///
/// `h` may act on the cavity or on the composite space; in the latter case
/// the ancilla starts in `|g⟩`.
pub fn conditioned_jump_track(
    h: &Operator,
    code: &CodeSpace,
    error: &Operator,
    t_jump: f64,
    total: f64,
) -> Result<Vec<JumpTrack>, DynamicsError> {
    if !(0.0..=total).contains(&t_jump) {
        return Err(DynamicsError::JumpOutOfRange { t_jump, total });
    }
    let composite = h.subsystem() == Subsystem::Composite;
    let e = if composite && error.subsystem() == Subsystem::Cavity { error.on_composite() } else { error.clone() };
    let u_before = expm(h, t_jump)?;
    let u_after = expm(h, total - t_jump)?;
    let u_total = expm(h, total)?;
    let track_op: CMatrix = matmul(u_after.matrix(), &matmul(e.matrix(), u_before.matrix()));
    let ref_op: CMatrix = matmul(e.matrix(), u_total.matrix());
    let mut out = Vec::with_capacity(6);
    for psi in code.cardinal_states() {
        let psi = if composite { psi.with_ancilla_ground() } else { psi };
        let track = StateVector::normalized(psi.space(), psi.subsystem(), &track_op * psi.data())?;
        let reference = StateVector::normalized(psi.space(), psi.subsystem(), &ref_op * psi.data())?;
        let ov: C64 = reference.inner(&track);
        out.push(JumpTrack { overlap_modulus: ov.norm(), phase: ov.arg() });
    }
    Ok(out)
}
