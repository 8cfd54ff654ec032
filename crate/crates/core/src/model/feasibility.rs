use super::{DeviceParams, DriveSpec, NoiseParams};

/// Separation factor used for every "much less than" comparison.
pub const MUCH_LESS: f64 = 10.0;

/// Numeric margins of the three PASS feasibility conditions.
///
/// Each margin is a ratio that must stay below `1/MUCH_LESS` (conditions 2
/// and 3) or within a factor `MUCH_LESS` of unity (condition 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub chi_over_ec: f64,
    /// Required amplitude scale `(χ/2) √(χ/2E_c)`, rad/s.
    pub omega_required: f64,
    /// `omega_required / χ`.
    pub margin1: f64,
    /// `½ √(χ/2E_c)`.
    pub margin2: f64,
    /// `(χ/2E_c) / (κ_a/κ_q)`.
    pub margin3: f64,
    pub condition1: bool,
    pub condition2: bool,
    pub condition3: bool,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.condition1 && self.condition2 && self.condition3
    }

    /// Ratio of an actual drive amplitude to the required scale; order unity
    /// when condition 1 is met by that drive.
    pub fn drive_ratio(&self, drive: &DriveSpec) -> f64 {
        drive.omega / self.omega_required
    }
}

pub fn pass_feasibility(params: &DeviceParams, noise: &NoiseParams) -> FeasibilityReport {
    let x = params.chi / (2.0 * params.anharmonicity);
    let omega_required = 0.5 * params.chi * x.sqrt();
    let margin1 = omega_required / params.chi;
    let margin2 = 0.5 * x.sqrt();
    let margin3 = x / (noise.kappa_a() / noise.kappa_q());
    FeasibilityReport {
        chi_over_ec: params.chi / params.anharmonicity,
        omega_required,
        margin1,
        margin2,
        margin3,
        // Ω must be small against χ for the drive to resolve photon numbers.
        condition1: margin1 < 1.0 / MUCH_LESS,
        condition2: margin2 < 1.0 / MUCH_LESS,
        condition3: margin3 < 1.0 / MUCH_LESS,
    }
}
