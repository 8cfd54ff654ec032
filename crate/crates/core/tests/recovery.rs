use std::sync::LazyLock;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use etsim_core::code::binomial_code;
use etsim_core::dynamics::{propagator, CollapseSet, Evolver, Superop};
use etsim_core::model::{CalibrationMode, DeviceParams, NoiseParams};
use etsim_core::qcore::{expm, CMatrix, CVector, DensityMatrix, HilbertSpace, Operator, StateVector, Subsystem};
use etsim_core::recovery::{
    aqec_cycle, aqec_grape_problem, grape_fidelity, grape_gradient, grape_optimize, ideal_aqec_unitary,
    repetitive_schedule, ControlPulse, GrapeOptions, GrapeProblem, InitialPulse, ScheduleOptions, AQEC_DURATION,
};
use etsim_core::scenarios::{Gate, GateSetup};
use etsim_core::C64;

static ET_SETUP: LazyLock<GateSetup> =
    LazyLock::new(|| GateSetup::new(Gate::RET, &DeviceParams::paper(), 8, CalibrationMode::Exact).unwrap());

fn space() -> HilbertSpace {
    HilbertSpace::new(8).unwrap()
}

fn excited(s: &StateVector) -> StateVector {
    StateVector::tensor(s, &StateVector::basis(s.space(), Subsystem::Ancilla, 1)).unwrap()
}

fn lost(s: &StateVector) -> StateVector {
    let a = Operator::cavity_destroy(s.space());
    StateVector::normalized(s.space(), Subsystem::Cavity, s.apply_raw(&a)).unwrap()
}

#[test]
fn ideal_unitary_maps_errors_back() {
    let code = binomial_code(space()).unwrap();
    let u = ideal_aqec_unitary(&code, 0.0, 0.0);
    let d = u.dim();
    assert!((u.matrix().adjoint() * u.matrix() - CMatrix::identity(d, d)).camax() < 1e-9);
    for psi in code.cardinal_states() {
        let out = u.matrix() * lost(&psi).with_ancilla_ground().data();
        let f = excited(&psi).data().dotc(&out).norm_sqr();
        assert!(f > 1.0 - 1e-10, "fidelity {f}");
        let kept = u.matrix() * psi.with_ancilla_ground().data();
        assert!((kept - psi.with_ancilla_ground().data()).camax() < 1e-12);
    }
}

#[test]
fn no_jump_correction() {
    let s = space();
    let code = binomial_code(s).unwrap();
    let kappa = NoiseParams::paper().kappa_a();
    let t = 120e-6;
    let u = ideal_aqec_unitary(&code, kappa, t);
    let damp = Operator::cavity_diagonal(s, |n| (-0.5 * kappa * n as f64 * t).exp());
    // |1_L⟩ = |2⟩ is only rescaled; |0_L⟩ changes shape and must be restored.
    let psi = code.codewords()[0].clone();
    let distorted = StateVector::normalized(s, Subsystem::Cavity, psi.apply_raw(&damp)).unwrap();
    let out = u.matrix() * distorted.with_ancilla_ground().data();
    let f = psi.with_ancilla_ground().data().dotc(&out).norm_sqr();
    assert!(f > 1.0 - 1e-10);
    // and elapsed = 0 leaves it unchanged
    let plain = ideal_aqec_unitary(&code, kappa, 0.0);
    let out = plain.matrix() * distorted.with_ancilla_ground().data();
    assert!(distorted.with_ancilla_ground().data().dotc(&out).norm_sqr() > 1.0 - 1e-12);
}

#[test]
fn noiseless_cycle_recovers_single_loss() {
    let code = binomial_code(space()).unwrap();
    let u = ideal_aqec_unitary(&code, 0.0, 0.0);
    let noise = NoiseParams::noiseless();
    for psi in code.cardinal_states() {
        let clean = aqec_cycle(&psi.with_ancilla_ground().to_density(), &u, &noise).unwrap();
        assert!(clean.p_flag < 1e-12);
        assert!(clean.rho_out.fidelity_pure(&psi.with_ancilla_ground()) > 1.0 - 1e-12);

        let hit = aqec_cycle(&lost(&psi).with_ancilla_ground().to_density(), &u, &noise).unwrap();
        assert_abs_diff_eq!(hit.p_flag, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hit.rho_out.trace(), 1.0, epsilon = 1e-12);
        assert!(hit.rho_out.fidelity_pure(&psi.with_ancilla_ground()) >= 0.999);
        let cav = hit.error_branch.expect("flagged branch");
        assert!(cav.fidelity_pure(&psi) >= 0.999);
        assert!(hit.code_branch.is_none());
    }
}

#[test]
fn readout_imperfection_flags_idle_state() {
    let code = binomial_code(space()).unwrap();
    let u = ideal_aqec_unitary(&code, 0.0, 0.0);
    let noise = NoiseParams::paper();
    let psi = code.logical_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).with_ancilla_ground();
    let out = aqec_cycle(&psi.to_density(), &u, &noise).unwrap();
    assert_abs_diff_eq!(out.p_flag, noise.readout_flip, epsilon = 1e-12);
    // a wrong reset leaves some ancilla excitation behind
    let pe = out.rho_out.expectation(&Operator::ancilla_excited(code.space()).on_composite());
    assert!(pe > 0.0 && pe < 0.05);
    let bad = aqec_cycle(&StateVector::fock(code.space(), 0).to_density(), &u, &noise);
    assert!(bad.is_err());
}

/// Random piecewise-constant problem on 8 levels with two controls.
fn random_problem(seed: u64) -> GrapeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 8;
    let mut herm = || {
        let m = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    };
    let drift = herm();
    let controls = vec![herm(), herm()];
    let mut v_in = CMatrix::zeros(d, 2);
    v_in[(0, 0)] = C64::new(1.0, 0.0);
    v_in[(3, 1)] = C64::new(1.0, 0.0);
    let mut v_out = CMatrix::zeros(d, 2);
    v_out[(5, 0)] = C64::new(1.0, 0.0);
    v_out[(1, 1)] = C64::new(1.0, 0.0);
    GrapeProblem {
        drift,
        controls,
        bounds: vec![1.5, 0.8],
        channels: vec!["drive".into()],
        v_in,
        v_out,
        segments: 20,
        duration: 3.0,
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let p = random_problem(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..p.n_params()).map(|_| rng.random_range(-0.8..0.8)).collect();
    let (f, g) = grape_gradient(&p, &x);
    assert_abs_diff_eq!(f, grape_fidelity(&p, &x), epsilon = 1e-13);
    let h = 1e-5;
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[k] += h;
        xm[k] -= h;
        let fd = (grape_fidelity(&p, &xp) - grape_fidelity(&p, &xm)) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / gmax);
    }
    assert!(worst < 1e-5, "relative gradient error {worst:e}");
}

#[test]
fn identity_target_is_trivial() {
    let d = 4;
    let v = CMatrix::identity(d, 2);
    let p = GrapeProblem {
        drift: CMatrix::zeros(d, d),
        controls: vec![CMatrix::identity(d, d), CMatrix::identity(d, d)],
        bounds: vec![1.0, 1.0],
        channels: vec!["c".into()],
        v_in: v.clone(),
        v_out: v,
        segments: 20,
        duration: 1.0,
    };
    let r = grape_optimize(&p, &GrapeOptions { initial: InitialPulse::Zero, ..Default::default() });
    assert_abs_diff_eq!(r.history[0], 1.0, epsilon = 1e-14);
    assert!(r.converged);
}

#[test]
fn grape_history_is_monotone_and_bounded() {
    let s = HilbertSpace::new(6).unwrap();
    let code = binomial_code(s).unwrap();
    let params = DeviceParams::paper();
    let tau = std::f64::consts::TAU;
    let p = aqec_grape_problem(&code, &params, 0.0, 0.0, tau * 5e6, tau * 1e6, 60, AQEC_DURATION);
    let r = grape_optimize(&p, &GrapeOptions { max_iter: 15, target: 0.99, ..Default::default() });
    assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    assert!(r.controls.iter().all(|x| x.abs() <= 1.0));
    assert!(r.pulse.max_amplitude() <= tau * 5e6 * (1.0 + 1e-12));
    assert_abs_diff_eq!(r.pulse.total_duration(), AQEC_DURATION, epsilon = 1e-15);
    assert_eq!(r.pulse.segments(), 60);
}

#[test]
fn pulse_csv_round_trip() {
    let p = random_problem(5);
    let x: Vec<f64> = (0..p.n_params()).map(|k| (k as f64 * 0.37).sin()).collect();
    let pulse = p.pulse(&x);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pulse.csv");
    pulse.write_csv(&path).unwrap();
    let back = ControlPulse::read_csv(&path).unwrap();
    assert_eq!(back, pulse);
    let mut rows = pulse.to_rows();
    rows.remove(0);
    assert!(ControlPulse::from_rows(&rows).is_err());
    assert!(ControlPulse::from_rows(&[]).is_err());
}

#[test]
fn schedule_semantics() {
    let setup = GateSetup::new(Gate::RET, &DeviceParams::paper(), 8, CalibrationMode::Exact).unwrap();
    let u = ideal_aqec_unitary(&setup.code, 0.0, 0.0);
    let psi = setup.code.logical_state(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).with_ancilla_ground();
    let rho = psi.to_density();
    // zero noise: the effective ET gate keeps every cycle on the ideal rotated state
    let h = setup.effective.on_composite();
    let interval = 120e-6;
    let gate = Superop::conjugation(expm(&h, interval).unwrap().matrix());
    let noise = NoiseParams::noiseless();
    let recs = repetitive_schedule(&rho, &gate, &u, &noise, &ScheduleOptions { n_cycles: 4, with_aqec: true }).unwrap();
    assert_eq!(recs.len(), 5);
    for r in &recs {
        let ideal = propagator(&[(h.clone(), interval * r.cycle as f64)]).unwrap();
        let target = StateVector::new(psi.space(), Subsystem::Composite, ideal.matrix() * psi.data()).unwrap();
        assert!(r.state.fidelity_pure(&target) > 1.0 - 1e-9);
    }
    // one cycle equals gate then recovery
    let paper = NoiseParams::paper();
    let mut ev = Evolver::new(&setup.driven, &CollapseSet::composite(setup.space, &paper), 0.5e-9).unwrap();
    let map = ev.map(2e-6).unwrap();
    let one = repetitive_schedule(&rho, &map, &u, &paper, &ScheduleOptions { n_cycles: 1, with_aqec: true }).unwrap();
    let manual = aqec_cycle(&map.apply(&rho), &u, &paper).unwrap();
    assert!((one[1].state.matrix() - manual.rho_out.matrix()).camax() < 1e-14);
    assert_abs_diff_eq!(one[1].p_flag, manual.p_flag, epsilon = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Loss at any time during an ET gate is undone by the same recovery.
    #[test]
    fn recovery_is_independent_of_jump_time(frac in 0.0f64..1.0, theta in 0.0f64..3.1, phi in 0.0f64..6.2) {
        let setup = &*ET_SETUP;
        let code = &setup.code;
        let total = 120e-6;
        let tj = frac * total;
        let u = ideal_aqec_unitary(code, 0.0, 0.0);
        let psi = code.logical_state(C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi));
        let h = &setup.effective;
        let a = Operator::cavity_destroy(setup.space);
        let v: CVector = expm(h, total - tj).unwrap().matrix()
            * (a.matrix() * (expm(h, tj).unwrap().matrix() * psi.data()));
        let after = StateVector::normalized(setup.space, Subsystem::Cavity, v).unwrap();
        let out = aqec_cycle(&after.with_ancilla_ground().to_density(), &u, &NoiseParams::noiseless()).unwrap();
        let ideal = StateVector::new(setup.space, Subsystem::Cavity, expm(h, total).unwrap().matrix() * psi.data()).unwrap();
        let cav: DensityMatrix = out.error_branch.unwrap();
        prop_assert!((cav.fidelity_pure(&ideal) - 1.0).abs() < 1e-3);
    }
}
