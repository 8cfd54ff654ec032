use rayon::prelude::*;

use super::ScenarioError;
use crate::code::binomial_code;
use crate::dynamics::{lindblad_evolve, trajectory_ensemble, CollapseSet, EvolveOptions};
use crate::model::{
    build_driven_h, fock_frequencies, induced_dephasing, pass_shift_table, DeviceParams, DriveSpec, NoiseParams,
    ShiftMethod, N_TRC,
};
use crate::qcore::{eigh, HilbertSpace, Operator, StateVector, Subsystem};
use crate::recovery::{aqec_grape_problem, grape_optimize, GrapeOptions, GrapeProblem, GrapeResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSweepRow {
    /// Ω, rad/s.
    pub amplitude: f64,
    pub n: usize,
    /// f_n from the exact dressed shifts, rad/s.
    pub f_exact: f64,
    pub f_perturbative: f64,
}

/// Fock frequencies `f₀..f₄` against drive amplitude at fixed detuning.
/// The model drive is `amplitude_scale` times each listed amplitude. Rows
/// are ordered by amplitude, then `n`.
pub fn pass_sweep(
    params: &DeviceParams,
    delta_d: f64,
    amplitudes: &[f64],
    amplitude_scale: f64,
) -> Result<Vec<PassSweepRow>, ScenarioError> {
    let mut rows = Vec::with_capacity(amplitudes.len() * (N_TRC + 1));
    for &omega in amplitudes {
        let drive = [DriveSpec::new(omega * amplitude_scale, delta_d)?];
        let exact = fock_frequencies(params, &pass_shift_table(params, &drive, N_TRC, ShiftMethod::ExactDressed)?);
        let pert = fock_frequencies(params, &pass_shift_table(params, &drive, N_TRC, ShiftMethod::Perturbative)?);
        for n in 0..=N_TRC {
            rows.push(PassSweepRow { amplitude: omega, n, f_exact: exact[n], f_perturbative: pert[n] });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationRow {
    pub amplitude: f64,
    pub n: usize,
    /// Ancilla excited population averaged over the second half of the run.
    pub p_excited: f64,
}

/// Ancilla excitation with the cavity in Fock `n` under one drive of
/// detuning `delta_d` and amplitude `amplitude_scale` times each listed
/// value. Only ancilla noise acts so the photon number stays fixed.
pub fn excitation_sweep(
    params: &DeviceParams,
    noise: &NoiseParams,
    delta_d: f64,
    amplitudes: &[f64],
    amplitude_scale: f64,
    focks: &[usize],
    cavity_dim: usize,
    duration: f64,
    dt: f64,
) -> Result<Vec<ExcitationRow>, ScenarioError> {
    let space = HilbertSpace::new(cavity_dim)?;
    if let Some(&n) = focks.iter().find(|&&n| n >= cavity_dim) {
        return Err(ScenarioError::Input(format!("Fock {n} outside cavity_dim {cavity_dim}")));
    }
    let ancilla_noise = NoiseParams { cavity_t1: f64::INFINITY, cavity_tphi: f64::INFINITY, ..*noise };
    let collapse = CollapseSet::composite(space, &ancilla_noise);
    let excited = Operator::ancilla_excited(space).on_composite();
    let jobs: Vec<(f64, usize)> = amplitudes.iter().flat_map(|&a| focks.iter().map(move |&n| (a, n))).collect();
    let samples = 16;
    jobs.par_iter()
        .map(|&(omega, n)| {
            let drive = [DriveSpec::new(omega * amplitude_scale, delta_d)?];
            let h = build_driven_h(params, &drive, space)?;
            let rho0 = StateVector::fock(space, n).with_ancilla_ground().to_density();
            let opts = EvolveOptions { dt, samples: 2 * samples, observables: vec![excited.clone()] };
            let res = lindblad_evolve(&rho0, &h, &collapse, duration, &opts)?;
            let tail = &res.expectations[0][samples + 1..];
            let p_excited = tail.iter().sum::<f64>() / tail.len() as f64;
            Ok(ExcitationRow { amplitude: omega, n, p_excited })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingCheck {
    pub n: usize,
    /// `Ω² κ_q / Δ_n²`, 1/s.
    pub predicted: f64,
    /// Ancilla decay events per unit time from trajectories, 1/s.
    pub simulated: f64,
    pub jumps: usize,
}

/// Compares the drive-induced dephasing rate of Fock `n` with the rate of
/// ancilla decay events seen by trajectories started in the dressed
/// `|n, g⟩` state. Each such event reveals the photon number and so
/// dephases superpositions involving `n`.
pub fn induced_dephasing_check(
    params: &DeviceParams,
    noise: &NoiseParams,
    drive: &DriveSpec,
    n: usize,
    cavity_dim: usize,
    n_traj: usize,
    duration: f64,
    seed: u64,
) -> Result<DephasingCheck, ScenarioError> {
    let space = HilbertSpace::new(cavity_dim)?;
    let h = build_driven_h(params, std::slice::from_ref(drive), space)?;
    let mut collapse = CollapseSet::empty();
    collapse.push(Operator::ancilla_lowering(space).on_composite(), noise.kappa_q());
    let (_, vecs) = eigh(h.static_h.matrix());
    let target = space.index(n, 0);
    let k = (0..vecs.ncols())
        .max_by(|&a, &b| vecs[(target, a)].norm_sqr().total_cmp(&vecs[(target, b)].norm_sqr()))
        .expect("non-empty");
    let psi0 = StateVector::normalized(space, Subsystem::Composite, vecs.column(k).into_owned())?;
    let dt = (duration / 2000.0).max(1e-9);
    let ens = trajectory_ensemble(seed, n_traj, &psi0, &h, &collapse, duration, dt)?;
    let jumps = ens.channel_counts[0];
    Ok(DephasingCheck {
        n,
        predicted: induced_dephasing(params, noise, drive, n)?,
        simulated: jumps as f64 / (n_traj as f64 * duration),
        jumps,
    })
}

/// GRAPE recovery pulse on the binomial code in a `cavity_dim`-level cavity.
pub fn aqec_pulse(
    params: &DeviceParams,
    kappa_a: f64,
    elapsed: f64,
    cavity_dim: usize,
    bounds: (f64, f64),
    segments: usize,
    duration: f64,
    opts: &GrapeOptions,
) -> Result<(GrapeProblem, GrapeResult), ScenarioError> {
    if segments < 20 {
        return Err(ScenarioError::Input(format!("GRAPE needs at least 20 segments, got {segments}")));
    }
    if !(bounds.0 > 0.0 && bounds.1 > 0.0) {
        return Err(ScenarioError::Input("amplitude bounds must be positive".into()));
    }
    let code = binomial_code(HilbertSpace::new(cavity_dim)?)?;
    let problem = aqec_grape_problem(&code, params, kappa_a, elapsed, bounds.0, bounds.1, segments, duration);
    let result = grape_optimize(&problem, opts);
    Ok((problem, result))
}
