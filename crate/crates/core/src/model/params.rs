use super::ModelError;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a frequency in Hz to rad/s.
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts rad/s to Hz.
pub fn to_hz(w: f64) -> f64 {
    w / TWO_PI
}

/// Static device Hamiltonian coefficients, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub chi: f64,
    pub kerr: f64,
    pub anharmonicity: f64,
    /// Cavity detuning of the rotating frame.
    pub frame_offset: f64,
    /// Ancilla frequency at zero photons in the rotating frame.
    pub omega_q: f64,
}

impl DeviceParams {
    pub fn new(chi: f64, kerr: f64, anharmonicity: f64) -> Result<Self, ModelError> {
        let p = Self { chi, kerr, anharmonicity, frame_offset: 0.0, omega_q: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// χ/2π = 1.60 MHz, K/2π = 4.8 kHz, E_c/2π = 252 MHz.
    pub fn paper() -> Self {
        Self { chi: hz(1.60e6), kerr: hz(4.8e3), anharmonicity: hz(252e6), frame_offset: 0.0, omega_q: 0.0 }
    }

    pub fn with_frame_offset(mut self, frame_offset: f64) -> Self {
        self.frame_offset = frame_offset;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("chi", self.chi), ("kerr", self.kerr), ("anharmonicity", self.anharmonicity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.frame_offset.is_finite() || !self.omega_q.is_finite() {
            return Err(ModelError::InvalidParams("non-finite frame offset".into()));
        }
        let ratio = self.kerr / self.kerr_estimate();
        if !(0.8..=1.2).contains(&ratio) {
            log::warn!(
                "kerr {:.3} kHz differs from chi^2/(4 E_c) = {:.3} kHz by a factor {:.2}",
                to_hz(self.kerr) / 1e3,
                to_hz(self.kerr_estimate()) / 1e3,
                ratio
            );
        }
        Ok(())
    }

    /// `χ² / 4E_c`, the Kerr inherited from the ancilla.
    pub fn kerr_estimate(&self) -> f64 {
        self.chi * self.chi / (4.0 * self.anharmonicity)
    }

    /// Whether `kerr` lies within 20% of [`Self::kerr_estimate`].
    pub fn kerr_consistent(&self) -> bool {
        (self.kerr / self.kerr_estimate() - 1.0).abs() <= 0.2
    }
}

/// Decay and dephasing times in seconds plus ancilla imperfections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub cavity_t1: f64,
    pub cavity_tphi: f64,
    pub qubit_t1: f64,
    pub qubit_tphi: f64,
    pub n_th: f64,
    pub readout_flip: f64,
    pub reset_fail: f64,
}

impl NoiseParams {
    pub fn paper() -> Self {
        Self {
            cavity_t1: 480e-6,
            cavity_tphi: 1.3e-3,
            qubit_t1: 35e-6,
            qubit_tphi: 39e-6,
            n_th: 0.016,
            readout_flip: 0.01,
            reset_fail: 0.01,
        }
    }

    /// No decoherence and perfect ancilla readout/reset.
    pub fn noiseless() -> Self {
        Self {
            cavity_t1: f64::INFINITY,
            cavity_tphi: f64::INFINITY,
            qubit_t1: f64::INFINITY,
            qubit_tphi: f64::INFINITY,
            n_th: 0.0,
            readout_flip: 0.0,
            reset_fail: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("cavity_t1", self.cavity_t1),
            ("cavity_tphi", self.cavity_tphi),
            ("qubit_t1", self.qubit_t1),
            ("qubit_tphi", self.qubit_tphi),
        ] {
            if !(v > 0.0) {
                return Err(ModelError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("n_th", self.n_th), ("readout_flip", self.readout_flip), ("reset_fail", self.reset_fail)] {
            if !(0.0..1.0).contains(&v) {
                return Err(ModelError::InvalidParams(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// κ_a = 1/T1 of the cavity.
    pub fn kappa_a(&self) -> f64 {
        1.0 / self.cavity_t1
    }

    /// κ_q = 1/T1 of the ancilla.
    pub fn kappa_q(&self) -> f64 {
        1.0 / self.qubit_t1
    }
}

/// One PASS drive: Rabi amplitude and detuning `ω_d − ω_q`, both rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub omega: f64,
    pub delta_d: f64,
}

impl DriveSpec {
    pub fn new(omega: f64, delta_d: f64) -> Result<Self, ModelError> {
        if !(omega >= 0.0) || !delta_d.is_finite() {
            return Err(ModelError::InvalidParams(format!("bad drive omega={omega}, delta_d={delta_d}")));
        }
        Ok(Self { omega, delta_d })
    }

    /// Drive given in units of `chi`.
    pub fn in_chi(params: &DeviceParams, omega_over_chi: f64, delta_over_chi: f64) -> Self {
        Self { omega: omega_over_chi * params.chi, delta_d: delta_over_chi * params.chi }
    }

    /// Detuning from the `n`-photon ancilla line.
    pub fn delta_n(&self, params: &DeviceParams, n: usize) -> f64 {
        self.delta_d + n as f64 * params.chi
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { omega: self.omega * s, delta_d: self.delta_d }
    }
}
