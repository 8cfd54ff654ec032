use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use super::{DeviceParams, DriveSpec, ModelError, NoiseParams, RESONANCE_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMethod {
    Perturbative,
    ExactDressed,
    /// Ground-branch eigenvalue of the numerically diagonalized 2×2 block.
    NumericOracle,
}

/// Per-Fock PASS shifts δ_n in rad/s, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassShiftTable {
    pub shifts: Vec<f64>,
    pub method: ShiftMethod,
}

impl PassShiftTable {
    pub fn zeros(n_max: usize, method: ShiftMethod) -> Self {
        Self { shifts: vec![0.0; n_max + 1], method }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.shifts.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.shifts.len() - 1
    }
}

/// Ground-branch AC-Stark shift of a two-level system driven at amplitude
/// `omega` and detuning `delta`.
pub fn dressed_shift(omega: f64, delta: f64) -> Result<f64, ModelError> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(ModelError::Resonance { drive: 0, n: 0, delta_n: delta, margin: 0.0 });
    }
    // Rationalized form of (−Δ + sgn Δ √(Δ²+4Ω²))/2; avoids cancellation at small Ω.
    let root = (delta * delta + 4.0 * omega * omega).sqrt();
    Ok(2.0 * omega * omega / (delta.abs() + root) * delta.signum())
}

fn check_resonance(i: usize, d: &DriveSpec, n: usize, delta_n: f64) -> Result<(), ModelError> {
    let margin = RESONANCE_MARGIN * d.omega;
    if delta_n == 0.0 || (d.omega > 0.0 && delta_n.abs() < margin) {
        return Err(ModelError::Resonance { drive: i, n, delta_n, margin });
    }
    Ok(())
}

fn numeric_shift(omega: f64, delta: f64) -> f64 {
    // Block in (g, e): [[0, Ω], [Ω, −Δ]]. The ground branch is the eigenvalue
    // nearest 0.
    let m = Matrix2::new(C64::new(0.0, 0.0), C64::new(omega, 0.0), C64::new(omega, 0.0), C64::new(-delta, 0.0));
    let eig = m.symmetric_eigenvalues();
    if eig[0].abs() < eig[1].abs() {
        eig[0]
    } else {
        eig[1]
    }
}

/// δ_n summed over drives, `n = 0..=n_max`.
pub fn pass_shift_table(
    params: &DeviceParams,
    drives: &[DriveSpec],
    n_max: usize,
    method: ShiftMethod,
) -> Result<PassShiftTable, ModelError> {
    let mut shifts = vec![0.0; n_max + 1];
    for (i, d) in drives.iter().enumerate() {
        for (n, s) in shifts.iter_mut().enumerate() {
            let delta_n = d.delta_n(params, n);
            check_resonance(i, d, n, delta_n)?;
            *s += match method {
                ShiftMethod::Perturbative => d.omega * d.omega / delta_n,
                ShiftMethod::ExactDressed => dressed_shift(d.omega, delta_n)?,
                ShiftMethod::NumericOracle => numeric_shift(d.omega, delta_n),
            };
        }
    }
    Ok(PassShiftTable { shifts, method })
}

/// Fock energies relative to vacuum with the ancilla in `|g⟩`, rad/s:
/// `f_n = Δω n − (K/2) n(n−1) + δ_n − δ_0`.
pub fn fock_frequencies(params: &DeviceParams, table: &PassShiftTable) -> Vec<f64> {
    (0..=table.n_max())
        .map(|n| {
            let nf = n as f64;
            params.frame_offset * nf - 0.5 * params.kerr * nf * (nf - 1.0) + table.get(n) - table.get(0)
        })
        .collect()
}

/// Drive-induced Fock dephasing rate γ_n = Ω² κ_q / Δ_n².
pub fn induced_dephasing(
    params: &DeviceParams,
    noise: &NoiseParams,
    drive: &DriveSpec,
    n: usize,
) -> Result<f64, ModelError> {
    let delta_n = drive.delta_n(params, n);
    if delta_n == 0.0 {
        return Err(ModelError::Resonance { drive: 0, n, delta_n, margin: 0.0 });
    }
    Ok(drive.omega * drive.omega * noise.kappa_q() / (delta_n * delta_n))
}
