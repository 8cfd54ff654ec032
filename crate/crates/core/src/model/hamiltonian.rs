use num_complex::Complex64 as C64;

use super::{DeviceParams, DriveSpec, ModelError, PassShiftTable, MAX_OMEGA_OVER_CHI, N_TRC, RESONANCE_MARGIN};
use crate::qcore::{CMatrix, HilbertSpace, Operator, Subsystem};

/// `H₀ = Δω a†a − χ a†a |e⟩⟨e| − (K/2) a†²a² + ω_q |e⟩⟨e|` on the composite space.
pub fn build_h0(params: &DeviceParams, space: HilbertSpace) -> Operator {
    let d = space.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for n in 0..space.cavity_dim() {
        let nf = n as f64;
        let cav = params.frame_offset * nf - 0.5 * params.kerr * nf * (nf - 1.0);
        m[(space.index(n, 0), space.index(n, 0))] = C64::new(cav, 0.0);
        m[(space.index(n, 1), space.index(n, 1))] = C64::new(cav - params.chi * nf + params.omega_q, 0.0);
    }
    Operator::hermitian(space, Subsystem::Composite, m).expect("diagonal real matrix")
}

/// Cavity-only Hamiltonian with the ancilla adiabatically in its dressed
/// ground state: `Δω n − (K/2) n(n−1) + δ_n` on the Fock diagonal.
pub fn effective_cavity_h(params: &DeviceParams, table: &PassShiftTable, space: HilbertSpace) -> Operator {
    Operator::cavity_diagonal(space, |n| {
        let nf = n as f64;
        params.frame_offset * nf - 0.5 * params.kerr * nf * (nf - 1.0) + table.get(n)
    })
}

/// `H(t) = H_static + e^{−iνt} V + e^{iνt} V†`.
///
/// The frame rotates at the first drive's frequency, so a single drive gives a
/// static Hamiltonian. A second drive appears through `V` at the difference
/// frequency `ν`.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    pub static_h: Operator,
    pub modulation: Option<(Operator, f64)>,
}

impl DrivenHamiltonian {
    pub fn from_static(h: Operator) -> Self {
        Self { static_h: h, modulation: None }
    }

    pub fn space(&self) -> HilbertSpace {
        self.static_h.space()
    }

    pub fn is_static(&self) -> bool {
        self.modulation.is_none()
    }

    /// Modulation period `2π/ν`, if time dependent.
    pub fn period(&self) -> Option<f64> {
        self.modulation.as_ref().map(|(_, nu)| std::f64::consts::TAU / nu.abs())
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut h = self.static_h.matrix().clone();
        if let Some((v, nu)) = &self.modulation {
            let ph = C64::from_polar(1.0, -nu * t);
            let vm = v.matrix();
            h += vm * ph + vm.adjoint() * ph.conj();
        }
        h
    }

    /// Upper bound on `‖H(t)‖` over all `t`, using the largest row sum.
    pub fn norm_bound(&self) -> f64 {
        let row_bound = |m: &CMatrix| {
            (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
        };
        // Remove the trace: a global energy offset does not affect dynamics.
        let s = self.static_h.matrix();
        let n = s.nrows();
        let shift = s.trace() / n as f64;
        let centered = s - CMatrix::identity(n, n) * shift;
        let mut b = row_bound(&centered);
        if let Some((v, _)) = &self.modulation {
            b += 2.0 * row_bound(v.matrix());
        }
        b
    }
}

fn check_drives(params: &DeviceParams, drives: &[DriveSpec]) -> Result<(), ModelError> {
    if drives.len() > 2 {
        return Err(ModelError::TooManyDrives(drives.len()));
    }
    for (i, d) in drives.iter().enumerate() {
        if d.omega >= MAX_OMEGA_OVER_CHI * params.chi {
            return Err(ModelError::DriveTooStrong { drive: i, omega: d.omega });
        }
        for n in 0..=N_TRC {
            let delta_n = d.delta_n(params, n);
            let margin = RESONANCE_MARGIN * d.omega;
            if delta_n.abs() < margin || delta_n == 0.0 {
                return Err(ModelError::Resonance { drive: i, n, delta_n, margin });
            }
        }
    }
    Ok(())
}

/// Driven Hamiltonian: `H₀ − Δ_d1 |e⟩⟨e| + Ω₁ σ_x` plus the second drive
/// `Ω₂ (e^{−iνt} σ₊ + h.c.)` with `ν = Δ_d2 − Δ_d1`.
///
/// `omega_q` is absorbed into the drive detuning when any drive is present.
pub fn build_driven_h(
    params: &DeviceParams,
    drives: &[DriveSpec],
    space: HilbertSpace,
) -> Result<DrivenHamiltonian, ModelError> {
    check_drives(params, drives)?;
    let h0 = build_h0(params, space);
    let Some(first) = drives.first() else {
        return Ok(DrivenHamiltonian::from_static(h0));
    };
    let excited = Operator::ancilla_excited(space).on_composite();
    let sx = Operator::sigma_x(space).on_composite();
    let detuning = -first.delta_d - params.omega_q;
    let static_h = &(&h0 + &(&excited * detuning)) + &(&sx * first.omega);
    let modulation = drives.get(1).map(|second| {
        let raise = Operator::ancilla_raising(space).on_composite();
        (&raise * second.omega, second.delta_d - first.delta_d)
    });
    Ok(DrivenHamiltonian { static_h, modulation })
}
