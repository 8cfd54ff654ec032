use std::path::Path;

use serde::Deserialize;

use etsim_core::model::{hz, CalibrationMode, DeviceParams, DriveSpec, ModelError, NoiseParams};
use etsim_core::scenarios::{AqecMode, Gate};

/// Bad or inconsistent configuration. Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub device: DeviceBlock,
    pub noise: NoiseBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub drives: DrivesBlock,
    #[serde(default)]
    pub pass_sweep: PassSweepBlock,
    #[serde(default)]
    pub et_verify: EtVerifyBlock,
    #[serde(default)]
    pub wigner: WignerBlock,
    #[serde(default)]
    pub gate_fidelity: GateFidelityBlock,
    #[serde(default)]
    pub repetitive: RepetitiveBlock,
    #[serde(default)]
    pub excitation: ExcitationBlock,
    #[serde(default)]
    pub grape: GrapeBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceBlock {
    pub chi_over_2pi_hz: f64,
    pub kerr_over_2pi_hz: f64,
    pub anharmonicity_over_2pi_hz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub cavity_t1_s: f64,
    pub cavity_tphi_s: f64,
    pub qubit_t1_s: f64,
    pub qubit_tphi_s: f64,
    pub n_th: f64,
    pub readout_flip: f64,
    pub reset_fail: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationChoice {
    Exact,
    TableFit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationBlock {
    pub cavity_dim: usize,
    pub dt_s: f64,
    pub calibration: CalibrationChoice,
    pub gates: Vec<String>,
    pub seed: u64,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            cavity_dim: 8,
            dt_s: 0.5e-9,
            calibration: CalibrationChoice::Exact,
            gates: Gate::ALL.iter().map(|g| g.name().to_string()).collect(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveEntry {
    pub omega_over_chi: f64,
    pub delta_over_chi: f64,
}

/// Nominal drives before calibration. Missing lists use the built-in values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesBlock {
    pub r_et: Option<Vec<DriveEntry>>,
    pub i_et: Option<Vec<DriveEntry>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PassSweepBlock {
    pub delta_over_chi: f64,
    pub omega_max_over_chi: f64,
    pub points: usize,
    /// Model amplitude per listed amplitude. Defaults to the R_ET calibration scale.
    pub amplitude_scale: Option<f64>,
}

impl Default for PassSweepBlock {
    fn default() -> Self {
        Self { delta_over_chi: -3.5, omega_max_over_chi: 0.2, points: 21, amplitude_scale: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EtVerifyBlock {
    pub total_s: f64,
    pub jump_times: usize,
    pub ramsey_samples: usize,
}

impl Default for EtVerifyBlock {
    fn default() -> Self {
        Self { total_s: 90e-6, jump_times: 10, ramsey_samples: 60 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerBlock {
    pub times_s: Vec<f64>,
    pub grid_points: usize,
    pub grid_extent: f64,
}

impl Default for WignerBlock {
    fn default() -> Self {
        Self { times_s: vec![0.0, 30e-6, 60e-6, 90e-6], grid_points: 31, grid_extent: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Ideal,
    Imperfect,
    Both,
}

impl ModeChoice {
    pub fn modes(self) -> Vec<AqecMode> {
        match self {
            ModeChoice::Ideal => vec![AqecMode::Ideal],
            ModeChoice::Imperfect => vec![AqecMode::Imperfect],
            ModeChoice::Both => vec![AqecMode::Ideal, AqecMode::Imperfect],
        }
    }
}

pub fn mode_name(m: AqecMode) -> &'static str {
    match m {
        AqecMode::Ideal => "ideal",
        AqecMode::Imperfect => "imperfect",
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateFidelityBlock {
    pub tg_s: Vec<f64>,
    pub mode: ModeChoice,
}

impl Default for GateFidelityBlock {
    fn default() -> Self {
        Self { tg_s: (0..=12).map(|k| k as f64 * 10e-6).collect(), mode: ModeChoice::Ideal }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepetitiveBlock {
    pub n_cycles: usize,
    pub mode: ModeChoice,
    pub include_no_aqec: bool,
    /// Overrides the per-gate interval for every gate.
    pub interval_s: Option<f64>,
}

impl Default for RepetitiveBlock {
    fn default() -> Self {
        Self { n_cycles: 10, mode: ModeChoice::Ideal, include_no_aqec: true, interval_s: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationBlock {
    pub delta_over_chi: f64,
    pub omega_over_2pi_hz: Vec<f64>,
    pub focks: Vec<usize>,
    pub duration_s: f64,
    pub amplitude_scale: Option<f64>,
}

impl Default for ExcitationBlock {
    fn default() -> Self {
        Self {
            delta_over_chi: -2.5,
            omega_over_2pi_hz: vec![0.0, 25e3, 50e3, 75e3, 100e3, 125e3, 150e3],
            focks: vec![0, 1, 2, 3, 4],
            duration_s: 100e-6,
            amplitude_scale: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrapeBlock {
    pub cavity_dim: usize,
    pub segments: usize,
    pub duration_s: f64,
    pub ancilla_bound_over_2pi_hz: f64,
    pub cavity_bound_over_2pi_hz: f64,
    /// Idle time the recovery compensates for.
    pub elapsed_s: f64,
    pub max_iter: usize,
    pub target: f64,
    pub initial_scale: f64,
}

impl Default for GrapeBlock {
    fn default() -> Self {
        Self {
            cavity_dim: 6,
            segments: 60,
            duration_s: 1.5e-6,
            ancilla_bound_over_2pi_hz: 5e6,
            cavity_bound_over_2pi_hz: 1e6,
            elapsed_s: 120e-6,
            max_iter: 500,
            target: 0.99,
            initial_scale: 0.1,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn device(&self) -> Result<DeviceParams, ConfigError> {
        let d = &self.device;
        Ok(DeviceParams::new(hz(d.chi_over_2pi_hz), hz(d.kerr_over_2pi_hz), hz(d.anharmonicity_over_2pi_hz))?)
    }

    pub fn noise(&self) -> Result<NoiseParams, ConfigError> {
        let n = &self.noise;
        let p = NoiseParams {
            cavity_t1: n.cavity_t1_s,
            cavity_tphi: n.cavity_tphi_s,
            qubit_t1: n.qubit_t1_s,
            qubit_tphi: n.qubit_tphi_s,
            n_th: n.n_th,
            readout_flip: n.readout_flip,
            reset_fail: n.reset_fail,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn calibration(&self) -> CalibrationMode {
        match self.simulation.calibration {
            CalibrationChoice::Exact => CalibrationMode::Exact,
            CalibrationChoice::TableFit => CalibrationMode::TableFit,
        }
    }

    pub fn gates(&self) -> Result<Vec<Gate>, ConfigError> {
        self.simulation
            .gates
            .iter()
            .map(|s| Gate::parse(s).ok_or_else(|| ConfigError(format!("simulation.gates: unknown gate {s:?}"))))
            .collect()
    }

    /// Nominal drives for `gate`, from the config when given.
    pub fn nominal_drives(&self, gate: Gate, params: &DeviceParams) -> Vec<DriveSpec> {
        let listed = match gate {
            Gate::RKerr => return vec![],
            Gate::RET => &self.drives.r_et,
            Gate::IET => &self.drives.i_et,
        };
        match listed {
            Some(list) => list.iter().map(|d| DriveSpec::in_chi(params, d.omega_over_chi, d.delta_over_chi)).collect(),
            None => gate.nominal_drives(params),
        }
    }

    /// Range and consistency checks that need no physics.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.device()?;
        self.noise()?;
        let bad = |what: &str| Err(ConfigError(what.to_string()));
        let s = &self.simulation;
        if s.cavity_dim < etsim_core::qcore::MIN_CODE_CAVITY_DIM {
            return bad("simulation.cavity_dim must be at least 6 to hold the code words");
        }
        if !(s.dt_s > 0.0) {
            return bad("simulation.dt_s must be positive");
        }
        if s.gates.is_empty() {
            return bad("simulation.gates must not be empty");
        }
        self.gates()?;
        for (name, list, want) in [("drives.r_et", &self.drives.r_et, 1), ("drives.i_et", &self.drives.i_et, 2)] {
            if let Some(list) = list {
                if list.len() != want {
                    return Err(ConfigError(format!("{name} needs exactly {want} drive(s), got {}", list.len())));
                }
                for d in list {
                    DriveSpec::new(d.omega_over_chi * params.chi, d.delta_over_chi * params.chi)
                        .map_err(|e| ConfigError(format!("{name}: {e}")))?;
                }
            }
        }
        let p = &self.pass_sweep;
        if p.points < 1 || !(p.omega_max_over_chi >= 0.0) {
            return bad("pass_sweep needs points >= 1 and a non-negative omega_max_over_chi");
        }
        for (name, scale) in [("pass_sweep", p.amplitude_scale), ("excitation", self.excitation.amplitude_scale)] {
            if let Some(v) = scale {
                if !(v > 0.0) {
                    return Err(ConfigError(format!("{name}.amplitude_scale must be positive")));
                }
            }
        }
        let e = &self.et_verify;
        if !(e.total_s > 0.0) || e.jump_times < 2 || e.ramsey_samples < 2 {
            return bad("et_verify needs total_s > 0, jump_times >= 2 and ramsey_samples >= 2");
        }
        if self.wigner.times_s.iter().any(|t| !(*t >= 0.0)) {
            return bad("wigner.times_s must be non-negative");
        }
        if self.wigner.grid_points > 0 && !(self.wigner.grid_extent > 0.0) {
            return bad("wigner.grid_extent must be positive");
        }
        if self.gate_fidelity.tg_s.iter().any(|t| !(*t >= 0.0)) {
            return bad("gate_fidelity.tg_s must be non-negative");
        }
        if let Some(i) = self.repetitive.interval_s {
            if !(i > 0.0) {
                return bad("repetitive.interval_s must be positive");
            }
        }
        let x = &self.excitation;
        if x.omega_over_2pi_hz.iter().any(|w| !(*w >= 0.0)) || !(x.duration_s > 0.0) {
            return bad("excitation needs non-negative amplitudes and a positive duration");
        }
        if let Some(n) = x.focks.iter().find(|&&n| n >= s.cavity_dim) {
            return Err(ConfigError(format!("excitation.focks: Fock {n} outside cavity_dim {}", s.cavity_dim)));
        }
        let g = &self.grape;
        if g.cavity_dim < etsim_core::qcore::MIN_CODE_CAVITY_DIM || g.segments < 20 || !(g.duration_s > 0.0) || !(g.elapsed_s >= 0.0) {
            return bad("grape needs cavity_dim >= 6, segments >= 20, duration_s > 0 and elapsed_s >= 0");
        }
        if !(g.ancilla_bound_over_2pi_hz > 0.0 && g.cavity_bound_over_2pi_hz > 0.0) {
            return bad("grape amplitude bounds must be positive");
        }
        if !(0.0..=1.0).contains(&g.target) || !(g.initial_scale >= 0.0) {
            return bad("grape.target must lie in [0, 1] and initial_scale must be non-negative");
        }
        Ok(())
    }
}
