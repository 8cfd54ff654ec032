use num_complex::Complex64 as C64;

use super::{GateSetup, ScenarioError};
use crate::code::{et_check, logical_blocks, EtReport, LogicalBlocks, DEFAULT_ET_TOL};
use crate::dynamics::{conditioned_jump_track, CollapseSet, Evolver, DEFAULT_DT};
use crate::qcore::{partial_trace_ancilla, CVector, Operator, StateVector, Subsystem};

#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrackSummary {
    pub total: f64,
    pub jump_times: Vec<f64>,
    /// `overlaps[i][s]`: jump time `i`, cardinal state `s`.
    pub overlaps: Vec<Vec<f64>>,
    pub phases: Vec<Vec<f64>>,
    pub max_deviation: f64,
    /// Fitted d(phase)/d(t_jump) averaged over the states, rad/s.
    pub phase_slope: f64,
}

/// Code- and error-space Ramsey frequencies, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyPair {
    pub times: Vec<f64>,
    pub code_phase: Vec<f64>,
    pub error_phase: Vec<f64>,
    pub code_frequency: f64,
    pub error_frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtVerifyReport {
    pub frame_offset: f64,
    pub fock_frequencies: Vec<f64>,
    pub blocks: LogicalBlocks,
    pub k_prime: f64,
    pub c: f64,
    pub et: EtReport,
    pub jump_track: JumpTrackSummary,
    pub ramsey: RamseyPair,
}

/// Least-squares slope of unwrapped phases against time.
pub fn fit_frequency(times: &[f64], phases: &[f64]) -> f64 {
    let n = times.len() as f64;
    let (mt, mp) = (times.iter().sum::<f64>() / n, phases.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, p) in times.iter().zip(phases) {
        sxy += (t - mt) * (p - mp);
        sxx += (t - mt) * (t - mt);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn unwrap(phases: &mut [f64]) {
    use std::f64::consts::{PI, TAU};
    for i in 1..phases.len() {
        let mut d = phases[i] - phases[i - 1];
        while d > PI {
            d -= TAU;
        }
        while d < -PI {
            d += TAU;
        }
        phases[i] = phases[i - 1] + d;
    }
}

/// Jump tracks of the effective Hamiltonian for `n_times` jump times
/// spread evenly over `[0, total]`.
fn jump_tracks(setup: &GateSetup, total: f64, n_times: usize) -> Result<JumpTrackSummary, ScenarioError> {
    let a = Operator::cavity_destroy(setup.space);
    let jump_times: Vec<f64> = (0..n_times).map(|i| total * i as f64 / (n_times - 1).max(1) as f64).collect();
    let mut overlaps = Vec::with_capacity(n_times);
    let mut phases = Vec::with_capacity(n_times);
    for &t in &jump_times {
        let tracks = conditioned_jump_track(&setup.effective, &setup.code, &a, t, total)?;
        overlaps.push(tracks.iter().map(|j| j.overlap_modulus).collect::<Vec<_>>());
        phases.push(tracks.iter().map(|j| j.phase).collect::<Vec<_>>());
    }
    let max_deviation = overlaps.iter().flatten().fold(0.0_f64, |m, o| m.max((1.0 - o).abs()));
    let mut slope = 0.0;
    let n_states = phases[0].len();
    for s in 0..n_states {
        let mut p: Vec<f64> = phases.iter().map(|row| row[s]).collect();
        unwrap(&mut p);
        slope += fit_frequency(&jump_times, &p);
    }
    Ok(JumpTrackSummary {
        total,
        jump_times,
        overlaps,
        phases,
        max_deviation,
        phase_slope: slope / n_states as f64,
    })
}

fn superposition(setup: &GateSetup, a: &CVector, b: &CVector) -> Result<StateVector, ScenarioError> {
    let v = (a + b).unscale(2f64.sqrt());
    Ok(StateVector::normalized(setup.space, Subsystem::Cavity, v)?.with_ancilla_ground())
}

/// Noiseless Ramsey pair under the full driven Hamiltonian: the phase of
/// `⟨1_L|ρ|0_L⟩` for an equal code superposition and of the corresponding
/// error-space coherence, sampled at `samples` points up to `total`.
pub fn ramsey_pair(setup: &GateSetup, total: f64, samples: usize, dt: f64) -> Result<RamseyPair, ScenarioError> {
    let mut evolver = Evolver::new(&setup.driven, &CollapseSet::empty(), dt)?;
    let cw = setup.code.codewords();
    let ew = setup.code.errorwords();
    let code0 = superposition(setup, cw[0].data(), cw[1].data())?.to_density();
    let err0 = superposition(setup, ew[0].data(), ew[1].data())?.to_density();
    let times: Vec<f64> = (0..=samples).map(|k| total * k as f64 / samples as f64).collect();
    let coherence = |rho: &crate::qcore::DensityMatrix, w: [&CVector; 2]| -> Result<C64, ScenarioError> {
        let cav = partial_trace_ancilla(rho)?;
        Ok(w[1].dotc(&(cav.matrix() * w[0])))
    };
    let mut code_phase = Vec::with_capacity(times.len());
    let mut error_phase = Vec::with_capacity(times.len());
    for &t in &times {
        let (c, e) = (evolver.evolve_state(&code0, t)?, evolver.evolve_state(&err0, t)?);
        code_phase.push(coherence(&c, [cw[0].data(), cw[1].data()])?.arg());
        error_phase.push(coherence(&e, [ew[0].data(), ew[1].data()])?.arg());
    }
    // ⟨1|ρ|0⟩ ∝ e^{−i(E₁−E₀)t}, so the frequency is minus the phase slope.
    let mut conj_code: Vec<f64> = code_phase.iter().map(|p| -p).collect();
    let mut conj_err: Vec<f64> = error_phase.iter().map(|p| -p).collect();
    unwrap(&mut conj_code);
    unwrap(&mut conj_err);
    Ok(RamseyPair {
        code_frequency: fit_frequency(&times, &conj_code),
        error_frequency: fit_frequency(&times, &conj_err),
        times,
        code_phase: conj_code,
        error_phase: conj_err,
    })
}

/// ET checks on the effective Hamiltonian, jump tracks over `total` with
/// `n_jump_times` jump times, and the Ramsey pair.
pub fn et_verify(
    setup: &GateSetup,
    total: f64,
    n_jump_times: usize,
    ramsey_samples: usize,
) -> Result<EtVerifyReport, ScenarioError> {
    let blocks = logical_blocks(&setup.effective, &setup.code)?;
    let et = et_check(&setup.effective, &setup.code, DEFAULT_ET_TOL)?;
    let jump_track = jump_tracks(setup, total, n_jump_times)?;
    let ramsey = ramsey_pair(setup, total, ramsey_samples, DEFAULT_DT)?;
    let m = setup.effective.matrix();
    let e0 = m[(0, 0)].re;
    Ok(EtVerifyReport {
        frame_offset: setup.params.frame_offset,
        fock_frequencies: (0..setup.space.cavity_dim()).map(|n| m[(n, n)].re - e0).collect(),
        k_prime: blocks.k_prime(),
        c: et.c(),
        blocks,
        et,
        jump_track,
        ramsey,
    })
}
