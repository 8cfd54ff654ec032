use num_complex::Complex64 as C64;

use super::RecoveryError;
use crate::code::CodeSpace;
use crate::dynamics::no_jump_map;
use crate::model::NoiseParams;
use crate::qcore::{CMatrix, CVector, DensityMatrix, HilbertSpace, Operator, StateVector, Subsystem, ANCILLA_DIM};

/// Columns of `inputs` must map to the matching columns of `outputs`.
#[derive(Debug, Clone)]
pub struct AqecTarget {
    pub space: HilbertSpace,
    /// Orthonormal domain vectors on the composite space, one per column.
    pub inputs: CMatrix,
    pub outputs: CMatrix,
}

fn composite(state: &StateVector, ancilla: usize) -> CVector {
    let anc = StateVector::basis(state.space(), Subsystem::Ancilla, ancilla);
    StateVector::tensor(state, &anc).expect("cavity state").data().clone()
}

/// Recovery isometry after an interval `elapsed` of cavity loss at rate
/// `kappa_a`:
///
/// * no-jump code words `N e^{−κ a†a t/2} |w⟩ |g⟩ → |w⟩ |g⟩`
/// * error words `|w_E⟩ |g⟩ → |w⟩ |e⟩`
pub fn aqec_target(code: &CodeSpace, kappa_a: f64, elapsed: f64) -> AqecTarget {
    let space = code.space();
    let nj = no_jump_map(space, kappa_a, elapsed);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for w in code.codewords() {
        let distorted = StateVector::normalized(space, Subsystem::Cavity, w.apply_raw(&nj)).expect("no-jump image");
        inputs.push(composite(&distorted, 0));
        outputs.push(composite(w, 0));
    }
    for (w, e) in code.codewords().iter().zip(code.errorwords()) {
        inputs.push(composite(e, 0));
        outputs.push(composite(w, 1));
    }
    AqecTarget { space, inputs: CMatrix::from_columns(&inputs), outputs: CMatrix::from_columns(&outputs) }
}

/// Extends orthonormal columns to a full basis by Gram–Schmidt over the
/// standard basis vectors in index order.
fn complete_basis(cols: &CMatrix) -> CMatrix {
    let d = cols.nrows();
    let mut basis: Vec<CVector> = cols.column_iter().map(|c| c.into_owned()).collect();
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = CVector::zeros(d);
        v[k] = C64::new(1.0, 0.0);
        // Two passes for numerical orthogonality.
        for _ in 0..2 {
            for b in &basis {
                let amp = b.dotc(&v);
                v -= b * amp;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.unscale(n));
        }
    }
    CMatrix::from_columns(&basis)
}

/// Unitary realizing [`aqec_target`], completed on the orthogonal
/// complement by pairing Gram–Schmidt extensions of domain and range.
pub fn ideal_aqec_unitary(code: &CodeSpace, kappa_a: f64, elapsed: f64) -> Operator {
    let target = aqec_target(code, kappa_a, elapsed);
    let dom = complete_basis(&target.inputs);
    let rng = complete_basis(&target.outputs);
    let u = &rng * dom.adjoint();
    Operator::new(target.space, Subsystem::Composite, u).expect("composite dimension")
}

#[derive(Debug, Clone)]
pub struct AqecOutcome {
    /// Composite state after recovery, measurement and reset.
    pub rho_out: DensityMatrix,
    /// Probability that the measurement reports an excited ancilla.
    pub p_flag: f64,
    /// Cavity state conditioned on no flag.
    pub code_branch: Option<DensityMatrix>,
    /// Cavity state conditioned on the flag.
    pub error_branch: Option<DensityMatrix>,
}

fn ancilla_projected(rho: &CMatrix, s: usize) -> CMatrix {
    let d = rho.nrows();
    CMatrix::from_fn(d, d, |i, j| if i % ANCILLA_DIM == s && j % ANCILLA_DIM == s { rho[(i, j)] } else { C64::new(0.0, 0.0) })
}

fn trace_ancilla(space: HilbertSpace, rho: &CMatrix) -> CMatrix {
    let d = space.cavity_dim();
    CMatrix::from_fn(d, d, |i, j| (0..ANCILLA_DIM).map(|s| rho[(i * ANCILLA_DIM + s, j * ANCILLA_DIM + s)]).sum())
}

/// Recovery unitary, ancilla measurement with flip probability
/// `readout_flip`, then feedback reset.
///
/// A misread or a failed reset pulse each leave the ancilla in the wrong
/// state, so it ends excited with probability
/// `p_f (1 − p_r) + (1 − p_f) p_r`, uncorrelated with the cavity.
pub fn aqec_cycle(rho: &DensityMatrix, unitary: &Operator, noise: &NoiseParams) -> Result<AqecOutcome, RecoveryError> {
    if rho.subsystem() != Subsystem::Composite {
        return Err(RecoveryError::Qcore(crate::qcore::QcoreError::SubsystemMismatch {
            expected: Subsystem::Composite,
            got: rho.subsystem(),
        }));
    }
    let space = rho.space();
    let after = rho.conjugate(unitary.matrix());
    let pg = ancilla_projected(after.matrix(), 0);
    let pe = ancilla_projected(after.matrix(), 1);
    let (pf, pr) = (noise.readout_flip, noise.reset_fail);
    let flag = &pe * C64::new(1.0 - pf, 0.0) + &pg * C64::new(pf, 0.0);
    let no_flag = &pg * C64::new(1.0 - pf, 0.0) + &pe * C64::new(pf, 0.0);
    let cav_flag = trace_ancilla(space, &flag);
    let cav_no_flag = trace_ancilla(space, &no_flag);
    let p_flag = cav_flag.trace().re;
    let cav_total = &cav_flag + &cav_no_flag;
    let q = pf * (1.0 - pr) + (1.0 - pf) * pr;
    let mut anc = CMatrix::zeros(ANCILLA_DIM, ANCILLA_DIM);
    anc[(0, 0)] = C64::new(1.0 - q, 0.0);
    anc[(1, 1)] = C64::new(q, 0.0);
    let rho_out = DensityMatrix::from_raw(space, Subsystem::Composite, cav_total.kronecker(&anc));
    Ok(AqecOutcome {
        rho_out,
        p_flag,
        code_branch: DensityMatrix::from_unnormalized(space, Subsystem::Cavity, cav_no_flag),
        error_branch: DensityMatrix::from_unnormalized(space, Subsystem::Cavity, cav_flag),
    })
}
