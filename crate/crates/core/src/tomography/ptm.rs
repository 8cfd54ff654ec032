use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::code::CodeSpace;
use crate::qcore::{partial_trace_ancilla, DensityMatrix, Operator, Subsystem};
use crate::model::NoiseParams;
use crate::recovery::{aqec_cycle, ideal_aqec_unitary};

/// Real 4×4 transfer matrix over `{I, X, Y, Z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTransferMatrix(pub Matrix4<f64>);

impl PauliTransferMatrix {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn compose(&self, first: &PauliTransferMatrix) -> Self {
        Self(self.0 * first.0)
    }
}

fn paulis() -> [Matrix2<C64>; 4] {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

fn bloch(rho: &Matrix2<C64>) -> Vector4<f64> {
    let p = paulis();
    Vector4::from_fn(|k, _| (p[k] * rho).trace().re)
}

/// PTM by least squares from the outputs for the six cardinal inputs in the
/// order `+Z, −Z, +X, −X, +Y, −Y`.
pub fn logical_ptm_from_outputs(outputs: &[Matrix2<C64>; 6]) -> PauliTransferMatrix {
    let inputs: [[f64; 4]; 6] = [
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
    ];
    // R = Σ_k out_k in_kᵀ (Σ_k in_k in_kᵀ)⁻¹ with the Gram matrix diag(6, 2, 2, 2).
    let gram_inv = Vector4::new(1.0 / 6.0, 0.5, 0.5, 0.5);
    let mut r = Matrix4::zeros();
    for (inp, out) in inputs.iter().zip(outputs) {
        let o = bloch(out);
        for i in 0..4 {
            for j in 0..4 {
                r[(i, j)] += o[i] * inp[j] * gram_inv[j];
            }
        }
    }
    PauliTransferMatrix(r)
}

/// Projects a cavity state onto the logical basis; weight outside the code
/// space is returned as the maximally mixed state.
pub fn decode_logical(rho: &DensityMatrix, code: &CodeSpace) -> Matrix2<C64> {
    let cav = if rho.subsystem() == Subsystem::Composite {
        partial_trace_ancilla(rho).expect("composite state")
    } else {
        rho.clone()
    };
    let w = code.codewords();
    let m = Matrix2::from_fn(|i, j| w[i].data().dotc(&(cav.matrix() * w[j].data())));
    let leaked = (cav.trace() - m.trace().re).max(0.0);
    m + Matrix2::identity() * C64::new(0.5 * leaked, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryPolicy {
    /// Project directly onto the code space.
    None,
    /// Noiseless ideal recovery, then projection.
    IdealDecode,
    /// Ideal recovery with readout, split on the ancilla flag.
    FlagSplit,
}

/// Total PTM and, for flag-split tomography, the conditional PTMs and the
/// mean probability of the error branch.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalPtm {
    pub total: PauliTransferMatrix,
    pub code_branch: Option<PauliTransferMatrix>,
    pub error_branch: Option<PauliTransferMatrix>,
    pub p_error: f64,
}

/// Process tomography of `channel` on the code.
///
/// `channel` receives the composite input `|ψ_L⟩⟨ψ_L| ⊗ |g⟩⟨g|` and returns
/// a composite or cavity state. With a recovery policy the output then goes
/// through `unitary` (the ideal AQEC unitary when `None`) and the readout;
/// `noise` only enters the flag-split policy through its readout and reset
/// imperfections.
pub fn logical_ptm(
    channel: &dyn Fn(&DensityMatrix) -> DensityMatrix,
    code: &CodeSpace,
    policy: RecoveryPolicy,
    unitary: Option<&Operator>,
    noise: &NoiseParams,
) -> LogicalPtm {
    let inputs: Vec<DensityMatrix> =
        code.cardinal_states().iter().map(|s| s.with_ancilla_ground().to_density()).collect();
    let default_unitary;
    let unitary = match unitary {
        Some(u) => u,
        None => {
            default_unitary = ideal_aqec_unitary(code, 0.0, 0.0);
            &default_unitary
        }
    };
    let ideal = NoiseParams::noiseless();
    let mut total = [Matrix2::<C64>::zeros(); 6];
    let mut code_out = [Matrix2::<C64>::zeros(); 6];
    let mut err_out = [Matrix2::<C64>::zeros(); 6];
    let mut p_error = 0.0;
    let mut branches_ok = true;
    for (k, rho) in inputs.iter().enumerate() {
        let out = channel(rho);
        match policy {
            RecoveryPolicy::None => total[k] = decode_logical(&out, code),
            RecoveryPolicy::IdealDecode | RecoveryPolicy::FlagSplit => {
                let composite = to_composite(&out);
                let n = if policy == RecoveryPolicy::FlagSplit { noise } else { &ideal };
                let outcome = aqec_cycle(&composite, unitary, n).expect("composite state");
                total[k] = decode_logical(&outcome.rho_out, code);
                p_error += outcome.p_flag / 6.0;
                match (&outcome.code_branch, &outcome.error_branch) {
                    (Some(c), Some(e)) => {
                        code_out[k] = decode_logical(c, code);
                        err_out[k] = decode_logical(e, code);
                    }
                    _ => branches_ok = false,
                }
            }
        }
    }
    let split = policy == RecoveryPolicy::FlagSplit && branches_ok;
    LogicalPtm {
        total: logical_ptm_from_outputs(&total),
        code_branch: split.then(|| logical_ptm_from_outputs(&code_out)),
        error_branch: split.then(|| logical_ptm_from_outputs(&err_out)),
        p_error,
    }
}

fn to_composite(rho: &DensityMatrix) -> DensityMatrix {
    if rho.subsystem() == Subsystem::Composite {
        rho.clone()
    } else {
        rho.with_ancilla_ground()
    }
}

/// Entanglement fidelity `Tr[R_idealᵀ R] / 4`.
pub fn process_fidelity(r: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> f64 {
    (ideal.0.transpose() * r.0).trace() / 4.0
}

/// `(2F + 1) / 3` for a qubit.
pub fn average_gate_fidelity(process: f64) -> f64 {
    (2.0 * process + 1.0) / 3.0
}

/// PTM of `e^{iφZ/2}`.
pub fn z_rotation_ptm(phi: f64) -> PauliTransferMatrix {
    let (s, c) = (-phi).sin_cos();
    let mut m = Matrix4::identity();
    m[(1, 1)] = c;
    m[(1, 2)] = -s;
    m[(2, 1)] = s;
    m[(2, 2)] = c;
    PauliTransferMatrix(m)
}

/// Logical phase `φ` of the best-matching `e^{iφZ/2}`, in `(−π, π]`.
pub fn ptm_phase(r: &PauliTransferMatrix) -> f64 {
    let m = &r.0;
    -(m[(2, 1)] - m[(1, 2)]).atan2(m[(1, 1)] + m[(2, 2)])
}
