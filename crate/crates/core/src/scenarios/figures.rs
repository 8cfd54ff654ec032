use num_complex::Complex64 as C64;
use nalgebra::Matrix2;

use super::{GateSetup, ScenarioError};
use crate::dynamics::{CollapseSet, Evolver, Superop};
use crate::model::{build_driven_h, NoiseParams};
use crate::qcore::{partial_trace_ancilla, DensityMatrix, Operator, StateVector};
use crate::recovery::{ideal_aqec_unitary, repetitive_schedule, ScheduleOptions, AQEC_DURATION};
use crate::tomography::{
    average_gate_fidelity, decode_logical, fit_exponential, logical_ptm, logical_ptm_from_outputs, parity_postselect,
    process_fidelity, ptm_phase, wigner, z_rotation_ptm, ExpFit, RecoveryPolicy, WignerMap, DEPOLARIZED_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Even photon parity: no error detected.
    Even,
    Odd,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Even => "even",
            Branch::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone)]
pub struct WignerFrame {
    pub time: f64,
    pub branch: Branch,
    pub probability: f64,
    /// Purity of the renormalized branch state; `NaN` for an empty branch.
    pub purity: f64,
    /// Phase of the logical coherence within the branch, radians.
    pub phase: f64,
    pub map: Option<WignerMap>,
}

/// Parity-resolved evolution of `(|0_L⟩ − i|1_L⟩)/√2` under the gate with
/// full noise. Wigner maps are computed only when `grid` is non-empty.
pub fn wigner_evolution(
    setup: &GateSetup,
    noise: &NoiseParams,
    times: &[f64],
    grid: &[C64],
    dt: f64,
) -> Result<Vec<WignerFrame>, ScenarioError> {
    let collapse = CollapseSet::composite(setup.space, noise);
    let mut evolver = Evolver::new(&setup.driven, &collapse, dt)?;
    let psi = setup.code.logical_state(C64::new(1.0, 0.0), C64::new(0.0, -1.0)).with_ancilla_ground();
    let rho0 = psi.to_density();
    let cw = setup.code.codewords();
    let ew = setup.code.errorwords();
    let mut frames = Vec::with_capacity(2 * times.len());
    for &t in times {
        let cav = partial_trace_ancilla(&evolver.evolve_state(&rho0, t)?)?;
        let split = parity_postselect(&cav);
        for (branch, state, p, words) in [
            (Branch::Even, &split.even, split.p_even, cw),
            (Branch::Odd, &split.odd, split.p_odd, ew),
        ] {
            let (purity, phase, map) = match state {
                Some(s) => {
                    let coh = words[1].data().dotc(&(s.matrix() * words[0].data()));
                    let map = (!grid.is_empty()).then(|| wigner(s, grid));
                    (s.purity(), coh.arg(), map)
                }
                None => (f64::NAN, f64::NAN, None),
            };
            frames.push(WignerFrame { time: t, branch, probability: p, purity, phase, map });
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqecMode {
    /// Instantaneous ideal unitary with perfect readout and reset.
    Ideal,
    /// Noisy undriven evolution for the pulse duration before the ideal
    /// unitary, then imperfect readout and reset.
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityRow {
    pub tg: f64,
    pub f_total: f64,
    pub f_code: f64,
    pub f_error: f64,
    pub p_no_error: f64,
    /// Unwrapped logical phase, radians.
    pub phase: f64,
    pub avg_fidelity: f64,
}

struct Recovery {
    idle: Option<Superop>,
    flag_noise: NoiseParams,
    /// Logical phase accumulated during the recovery pulse.
    idle_phase: f64,
}

fn recovery(setup: &GateSetup, noise: &NoiseParams, mode: AqecMode, dt: f64) -> Result<Recovery, ScenarioError> {
    match mode {
        AqecMode::Ideal => Ok(Recovery { idle: None, flag_noise: NoiseParams::noiseless(), idle_phase: 0.0 }),
        AqecMode::Imperfect => {
            let h0 = build_driven_h(&setup.params, &[], setup.space)?;
            let collapse = CollapseSet::composite(setup.space, noise);
            let map = Evolver::new(&h0, &collapse, dt)?.map(AQEC_DURATION)?;
            let m = h0.static_h.ancilla_block(0)?;
            let rate = m.matrix()[(2, 2)].re - m.matrix()[(0, 0)].re;
            Ok(Recovery { idle: Some(map), flag_noise: *noise, idle_phase: rate * AQEC_DURATION })
        }
    }
}

fn unwrap_phase(prev: Option<f64>, phase: f64) -> f64 {
    use std::f64::consts::TAU;
    match prev {
        None => phase,
        Some(p) => phase + TAU * ((p - phase) / TAU).round(),
    }
}

/// Gate for `T_G`, one recovery cycle, then flag-split logical tomography.
pub fn gate_fidelity(
    setup: &GateSetup,
    noise: &NoiseParams,
    tgs: &[f64],
    mode: AqecMode,
    dt: f64,
) -> Result<Vec<FidelityRow>, ScenarioError> {
    let collapse = CollapseSet::composite(setup.space, noise);
    let mut evolver = Evolver::new(&setup.driven, &collapse, dt)?;
    let rec = recovery(setup, noise, mode, dt)?;
    let mut rows = Vec::with_capacity(tgs.len());
    let mut prev_phase = None;
    for &tg in tgs {
        let gate = evolver.map(tg)?;
        let map = match &rec.idle {
            Some(idle) => idle.after(&gate),
            None => gate,
        };
        let elapsed = tg + if rec.idle.is_some() { AQEC_DURATION } else { 0.0 };
        let unitary = ideal_aqec_unitary(&setup.code, noise.kappa_a(), elapsed);
        let channel = |rho: &DensityMatrix| map.apply(rho);
        let ptm = logical_ptm(&channel, &setup.code, RecoveryPolicy::FlagSplit, Some(&unitary), &rec.flag_noise);
        let ideal = z_rotation_ptm(setup.ideal_phase(tg) + rec.idle_phase);
        let f_total = process_fidelity(&ptm.total, &ideal);
        let branch_f = |b: &Option<_>| b.as_ref().map_or(f64::NAN, |r| process_fidelity(r, &ideal));
        let phase = unwrap_phase(prev_phase, ptm_phase(&ptm.total));
        prev_phase = Some(phase);
        rows.push(FidelityRow {
            tg,
            f_total,
            f_code: branch_f(&ptm.code_branch),
            f_error: branch_f(&ptm.error_branch),
            p_no_error: 1.0 - ptm.p_error,
            phase,
            avg_fidelity: average_gate_fidelity(f_total),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitiveOptions {
    pub interval: f64,
    pub n_cycles: usize,
    pub with_aqec: bool,
    pub mode: AqecMode,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct RepetitiveRun {
    pub with_aqec: bool,
    /// Elapsed time at each record, starting at 0.
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub fit: Option<ExpFit>,
}

/// Repeated gate intervals, each followed by a recovery cycle when enabled.
/// Fidelity is measured against the ideal accumulated logical phase after
/// projecting the cavity onto the code space.
pub fn repetitive(setup: &GateSetup, noise: &NoiseParams, opts: &RepetitiveOptions) -> Result<RepetitiveRun, ScenarioError> {
    let rec = if opts.with_aqec {
        recovery(setup, noise, opts.mode, opts.dt)?
    } else {
        recovery(setup, noise, AqecMode::Ideal, opts.dt)?
    };
    let pulse_time = if rec.idle.is_some() { AQEC_DURATION } else { 0.0 };
    let gate_time = opts.interval - pulse_time;
    if gate_time <= 0.0 {
        return Err(ScenarioError::Input(format!(
            "interval {:.3e} s does not exceed the recovery duration",
            opts.interval
        )));
    }
    let collapse = CollapseSet::composite(setup.space, noise);
    let gate = Evolver::new(&setup.driven, &collapse, opts.dt)?.map(gate_time)?;
    let map = match &rec.idle {
        Some(idle) => idle.after(&gate),
        None => gate,
    };
    let unitary: Operator = ideal_aqec_unitary(&setup.code, noise.kappa_a(), opts.interval);
    let sched = ScheduleOptions { n_cycles: opts.n_cycles, with_aqec: opts.with_aqec };
    let records: Vec<Vec<Matrix2<C64>>> = setup
        .code
        .cardinal_states()
        .iter()
        .map(|s: &StateVector| {
            let rho0 = s.with_ancilla_ground().to_density();
            let recs = repetitive_schedule(&rho0, &map, &unitary, &rec.flag_noise, &sched)?;
            Ok(recs.iter().map(|r| decode_logical(&r.state, &setup.code)).collect())
        })
        .collect::<Result<_, ScenarioError>>()?;
    let per_cycle = setup.ideal_phase(gate_time) + rec.idle_phase;
    let mut times = Vec::with_capacity(opts.n_cycles + 1);
    let mut fidelities = Vec::with_capacity(opts.n_cycles + 1);
    for c in 0..=opts.n_cycles {
        let outs: [Matrix2<C64>; 6] = std::array::from_fn(|k| records[k][c]);
        let ptm = logical_ptm_from_outputs(&outs);
        times.push(c as f64 * opts.interval);
        fidelities.push(process_fidelity(&ptm, &z_rotation_ptm(per_cycle * c as f64)));
    }
    let fit = fit_exponential(&times, &fidelities, DEPOLARIZED_FLOOR).ok();
    Ok(RepetitiveRun { with_aqec: opts.with_aqec, times, fidelities, fit })
}
