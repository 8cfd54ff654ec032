use num_complex::Complex64 as C64;

use super::blocks::{block, cavity_matrix, leakage};
use super::{CodeError, CodeSpace};
use crate::model::{DeviceParams, PassShiftTable};
use crate::qcore::Operator;

/// Default tolerance: 0.2 kHz in angular units.
pub const DEFAULT_ET_TOL: f64 = 0.2e3 * std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub struct EtReport {
    pub satisfied: bool,
    /// Real offset `c` per segment, rad/s.
    pub c_of_t: Vec<f64>,
    /// Imaginary part of the fitted offset, reported for completeness.
    pub c_imag: Vec<f64>,
    /// `max |P_j†HP_j − P_C†HP_C − c P_C|` including subspace leakage.
    pub worst_violation: f64,
    /// `max ‖[E_j, H] |w⟩‖ / √α_j` over codewords.
    pub commutator_violation: f64,
    pub commutator_satisfied: bool,
}

impl EtReport {
    pub fn c(&self) -> f64 {
        self.c_of_t.first().copied().unwrap_or(0.0)
    }
}

struct SegmentCheck {
    c: C64,
    violation: f64,
    commutator: f64,
}

fn check_one(h: &Operator, code: &CodeSpace) -> Result<SegmentCheck, CodeError> {
    h.check_hermitian().map_err(CodeError::Qcore)?;
    let m = cavity_matrix(h)?;
    let cw = [code.codewords()[0].data(), code.codewords()[1].data()];
    let code_block = block(&m, cw);
    let mut violation = leakage(&m, cw);
    let mut c_sum = C64::new(0.0, 0.0);
    let mut diffs = Vec::new();
    let mut commutator: f64 = 0.0;
    for (pj, (e, alpha)) in code.p_errors().iter().zip(code.errors().iter().zip(code.alphas())) {
        let images = [pj.matrix() * cw[0], pj.matrix() * cw[1]];
        let eb = block(&m, [&images[0], &images[1]]);
        violation = violation.max(leakage(&m, [&images[0], &images[1]]));
        let d = eb - code_block;
        c_sum += (d[(0, 0)] + d[(1, 1)]) * 0.5;
        diffs.push(d);
        let em = e.matrix();
        let comm = em * &m - &m * em;
        for w in cw {
            commutator = commutator.max((&comm * w).norm() / alpha.sqrt());
        }
    }
    let c = if diffs.is_empty() { C64::new(0.0, 0.0) } else { c_sum / diffs.len() as f64 };
    for d in &diffs {
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C64::new(c.re, 0.0) } else { C64::new(0.0, 0.0) };
                violation = violation.max((d[(i, j)] - target).norm());
            }
        }
    }
    Ok(SegmentCheck { c, violation, commutator })
}

/// ET check for a static Hamiltonian. Composite operators are projected
/// onto the ancilla ground manifold.
pub fn et_check(h: &Operator, code: &CodeSpace, tol: f64) -> Result<EtReport, CodeError> {
    et_check_segments(std::slice::from_ref(h), code, tol)
}

/// ET check for piecewise-constant segments; `c` is fitted per segment.
pub fn et_check_segments(segments: &[Operator], code: &CodeSpace, tol: f64) -> Result<EtReport, CodeError> {
    let mut c_of_t = Vec::with_capacity(segments.len());
    let mut c_imag = Vec::with_capacity(segments.len());
    let mut worst: f64 = 0.0;
    let mut commutator: f64 = 0.0;
    for h in segments {
        let s = check_one(h, code)?;
        c_of_t.push(s.c.re);
        c_imag.push(s.c.im);
        worst = worst.max(s.violation);
        commutator = commutator.max(s.commutator);
    }
    Ok(EtReport {
        satisfied: worst < tol,
        c_of_t,
        c_imag,
        worst_violation: worst,
        commutator_violation: commutator,
        commutator_satisfied: commutator < tol,
    })
}

/// Frame offset Δω that removes the relative phase of `|0⟩` and `|4⟩`:
/// `4Δω − 6K + δ₄ − δ₀ = 0`.
pub fn choose_frame_offset(params: &DeviceParams, table: &PassShiftTable) -> f64 {
    (6.0 * params.kerr - table.get(4) + table.get(0)) / 4.0
}
