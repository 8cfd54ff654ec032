//! End-to-end recipes shared by the command-line tool and the acceptance
//! tests. Every function here is deterministic for fixed inputs.

mod figures;
mod pass;
mod verify;

pub use figures::{
    gate_fidelity, repetitive, wigner_evolution, AqecMode, Branch, FidelityRow, RepetitiveOptions, RepetitiveRun,
    WignerFrame,
};
pub use pass::{
    aqec_pulse, excitation_sweep, induced_dephasing_check, pass_sweep, DephasingCheck, ExcitationRow, PassSweepRow,
};
pub use verify::{et_verify, fit_frequency, ramsey_pair, EtVerifyReport, JumpTrackSummary, RamseyPair};

use thiserror::Error;

use crate::code::{binomial_code, choose_frame_offset, CodeError, CodeSpace};
use crate::dynamics::DynamicsError;
use crate::model::{
    build_driven_h, calibrate_et_idle, calibrate_et_phase, calibrate_table_fit, effective_cavity_h, hz,
    pass_shift_table, Calibration, CalibrationMode, DeviceParams, DriveSpec, DrivenHamiltonian, ModelError,
    PassShiftTable, ShiftMethod,
};
use crate::qcore::{HilbertSpace, Operator, QcoreError};
use crate::recovery::RecoveryError;
use crate::tomography::TomographyError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
    #[error("invalid scenario input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Bare Kerr evolution, no PASS drive.
    RKerr,
    /// Single-drive error-transparent phase gate.
    RET,
    /// Two-drive error-transparent idle gate.
    IET,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::RKerr, Gate::RET, Gate::IET];

    pub fn name(self) -> &'static str {
        match self {
            Gate::RKerr => "R_Kerr",
            Gate::RET => "R_ET",
            Gate::IET => "I_ET",
        }
    }

    pub fn parse(s: &str) -> Option<Gate> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "rkerr" | "kerr" => Some(Gate::RKerr),
            "ret" => Some(Gate::RET),
            "iet" => Some(Gate::IET),
            _ => None,
        }
    }

    /// Nominal drive amplitudes and detunings before calibration.
    pub fn nominal_drives(self, params: &DeviceParams) -> Vec<DriveSpec> {
        match self {
            Gate::RKerr => vec![],
            Gate::RET => vec![DriveSpec::in_chi(params, 0.074, -3.41)],
            Gate::IET => vec![DriveSpec::in_chi(params, 0.054, -3.37), DriveSpec::in_chi(params, 0.074, -2.27)],
        }
    }

    /// Measured `f₁..f₄` (rad/s, Δω = 0) used by the table-fit calibration.
    pub fn measured_frequencies(self) -> [f64; 4] {
        let khz = match self {
            Gate::RKerr => [0.14, -4.55, -14.39, -28.92],
            Gate::RET => [-0.10, -5.52, -18.90, -24.37],
            Gate::IET => [-0.88, -12.16, -13.05, -24.34],
        };
        khz.map(|f| hz(f * 1e3))
    }

    /// Gate interval used in the repetitive runs.
    pub fn repetition_interval(self) -> f64 {
        match self {
            Gate::RKerr => 60e-6,
            Gate::RET | Gate::IET => 120e-6,
        }
    }
}

/// Everything needed to simulate one gate: calibrated drives, shifts, the
/// rotating frame and both the full and the effective Hamiltonian.
#[derive(Debug, Clone)]
pub struct GateSetup {
    pub gate: Gate,
    /// Device parameters with the frame offset applied.
    pub params: DeviceParams,
    pub drives: Vec<DriveSpec>,
    pub calibration: Option<Calibration>,
    pub table: PassShiftTable,
    pub space: HilbertSpace,
    pub code: CodeSpace,
    /// Driven composite Hamiltonian in the frame of the first drive.
    pub driven: DrivenHamiltonian,
    /// Cavity Hamiltonian with exact dressed shifts.
    pub effective: Operator,
    /// `E₂ − E₀` of the effective Hamiltonian: the logical phase rate.
    pub logical_rate: f64,
}

impl GateSetup {
    /// Calibrates the nominal drives of `gate` and builds the setup.
    pub fn new(
        gate: Gate,
        params: &DeviceParams,
        cavity_dim: usize,
        mode: CalibrationMode,
    ) -> Result<Self, ScenarioError> {
        let nominal = gate.nominal_drives(params);
        Self::with_nominal(gate, params, &nominal, cavity_dim, mode)
    }

    /// As [`GateSetup::new`] with caller-supplied nominal drives.
    pub fn with_nominal(
        gate: Gate,
        params: &DeviceParams,
        nominal: &[DriveSpec],
        cavity_dim: usize,
        mode: CalibrationMode,
    ) -> Result<Self, ScenarioError> {
        let params = params.with_frame_offset(0.0);
        let calibration = match (gate, mode) {
            (Gate::RKerr, _) => None,
            (_, CalibrationMode::TableFit) => {
                Some(calibrate_table_fit(&params, nominal, &gate.measured_frequencies(), true)?)
            }
            (Gate::RET, CalibrationMode::Exact) => {
                let d = nominal.first().ok_or_else(|| ScenarioError::Input("R_ET needs one drive".into()))?;
                Some(calibrate_et_phase(&params, d)?)
            }
            (Gate::IET, CalibrationMode::Exact) => {
                let d: [DriveSpec; 2] = nominal
                    .try_into()
                    .map_err(|_| ScenarioError::Input("I_ET needs two drives".into()))?;
                Some(calibrate_et_idle(&params, &d)?)
            }
        };
        let drives = calibration.as_ref().map(|c| c.drives.clone()).unwrap_or_else(|| nominal.to_vec());
        let mut setup = Self::from_drives(gate, &params, &drives, cavity_dim)?;
        setup.calibration = calibration;
        Ok(setup)
    }

    /// Uses `drives` as given, without calibration.
    pub fn from_drives(
        gate: Gate,
        params: &DeviceParams,
        drives: &[DriveSpec],
        cavity_dim: usize,
    ) -> Result<Self, ScenarioError> {
        let space = HilbertSpace::new(cavity_dim)?;
        let code = binomial_code(space)?;
        let table = pass_shift_table(params, drives, cavity_dim - 1, ShiftMethod::ExactDressed)?;
        let params = params.with_frame_offset(choose_frame_offset(params, &table));
        let driven = build_driven_h(&params, drives, space)?;
        let effective = effective_cavity_h(&params, &table, space);
        let m = effective.matrix();
        let logical_rate = m[(2, 2)].re - m[(0, 0)].re;
        Ok(Self {
            gate,
            params,
            drives: drives.to_vec(),
            calibration: None,
            table,
            space,
            code,
            driven,
            effective,
            logical_rate,
        })
    }

    /// Logical phase the ideal gate accumulates over `t`.
    pub fn ideal_phase(&self, t: f64) -> f64 {
        self.logical_rate * t
    }
}
