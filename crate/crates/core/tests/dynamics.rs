use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use etsim_core::code::{binomial_code, et_check, DEFAULT_ET_TOL};
use etsim_core::dynamics::{
    conditioned_jump_track, lindblad_evolve, no_jump_map, propagator, seed_for, trajectory_ensemble, trajectory_run,
    CollapseSet, DynamicsError, Evolver, EvolveOptions,
};
use etsim_core::model::{DrivenHamiltonian, NoiseParams};
use etsim_core::qcore::{CMatrix, HilbertSpace, Operator, StateVector, Subsystem};
use etsim_core::scenarios::{Gate, GateSetup};
use etsim_core::model::{CalibrationMode, DeviceParams};
use etsim_core::C64;

fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn zero_h(space: HilbertSpace) -> DrivenHamiltonian {
    DrivenHamiltonian::from_static(Operator::zeros(space, Subsystem::Cavity))
}

fn random_hermitian(space: HilbertSpace, entries: &[f64]) -> Operator {
    let d = space.cavity_dim();
    let mut m = CMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let (re, im) = (entries[k % entries.len()], entries[(k + 1) % entries.len()]);
            k += 2;
            if i == j {
                m[(i, i)] = cplx(re, 0.0);
            } else {
                m[(i, j)] = cplx(re, im);
                m[(j, i)] = cplx(re, -im);
            }
        }
    }
    Operator::hermitian(space, Subsystem::Cavity, m).unwrap()
}

/// Independent propagator oracle: many small steps, each a 14-term Taylor series.
fn taylor_product(segments: &[(Operator, f64)], steps: usize) -> CMatrix {
    let d = segments[0].0.dim();
    let mut u = CMatrix::identity(d, d);
    for (h, dur) in segments {
        let a = h.matrix() * cplx(0.0, -dur / steps as f64);
        let mut step = CMatrix::identity(d, d);
        let mut term = CMatrix::identity(d, d);
        for k in 1..14 {
            term = &term * &a / cplx(k as f64, 0.0);
            step += &term;
        }
        for _ in 0..steps {
            u = &step * &u;
        }
    }
    u
}

fn et_setup(dim: usize) -> GateSetup {
    GateSetup::new(Gate::RET, &DeviceParams::paper(), dim, CalibrationMode::Exact).unwrap()
}

#[test]
fn cavity_decay_law() {
    let s = HilbertSpace::new(4).unwrap();
    let noise = NoiseParams::paper();
    let set = CollapseSet::cavity_loss(s, Subsystem::Cavity, &noise);
    let rho = StateVector::fock(s, 1).to_density();
    let opts = EvolveOptions { dt: 1e-7, samples: 4, observables: vec![Operator::cavity_projector(s, 1)] };
    let r = lindblad_evolve(&rho, &zero_h(s), &set, noise.cavity_t1, &opts).unwrap();
    assert_abs_diff_eq!(r.expectations[0][4], (-1.0f64).exp(), epsilon = 1e-3);
    assert!(r.trace_error < 1e-6);
}

#[test]
fn thermal_steady_state() {
    let s = HilbertSpace::new(2).unwrap();
    let noise = NoiseParams::paper();
    let set = CollapseSet::ancilla_relaxation(s, &noise);
    let h = DrivenHamiltonian::from_static(Operator::zeros(s, Subsystem::Composite));
    let rho = StateVector::fock(s, 0).with_ancilla_ground().to_density();
    let opts = EvolveOptions { dt: 1e-7, samples: 1, observables: vec![Operator::ancilla_excited(s).on_composite()] };
    let r = lindblad_evolve(&rho, &h, &set, 20.0 * noise.qubit_t1, &opts).unwrap();
    let pe = r.expectations[0][1];
    assert!((pe / noise.n_th - 1.0).abs() < 0.05, "p_e = {pe}");
}

#[test]
fn trace_and_hermiticity_preserved_under_full_noise() {
    let setup = et_setup(6);
    let noise = NoiseParams::paper();
    let set = CollapseSet::composite(setup.space, &noise);
    let psi = setup.code.logical_state(cplx(0.6, 0.0), cplx(0.0, 0.8)).with_ancilla_ground();
    let opts = EvolveOptions { samples: 8, ..Default::default() };
    let r = lindblad_evolve(&psi.to_density(), &setup.driven, &set, 2e-6, &opts).unwrap();
    assert!(r.trace_error < 1e-6, "trace drift {}", r.trace_error);
    assert!(r.hermiticity_error < 1e-6);
    assert!(r.clipped < 1e-6);
}

#[test]
fn noiseless_lindblad_matches_unitary() {
    let setup = et_setup(6);
    let t = 0.2e-6;
    let psi = setup.code.logical_state(cplx(0.6, 0.0), cplx(0.0, 0.8)).with_ancilla_ground();
    let opts = EvolveOptions { dt: 0.1e-9, ..Default::default() };
    let r = lindblad_evolve(&psi.to_density(), &setup.driven, &CollapseSet::empty(), t, &opts).unwrap();
    let u = propagator(&[(setup.driven.static_h.clone(), t)]).unwrap();
    let expected = psi.to_density().conjugate(u.matrix());
    let diff = (r.final_state.matrix() - expected.matrix()).camax();
    assert!(diff < 1e-8, "max deviation {diff:e}");
}

#[test]
fn step_size_and_time_validation() {
    let setup = et_setup(6);
    let err = Evolver::new(&setup.driven, &CollapseSet::empty(), 1e-7).unwrap_err();
    assert!(matches!(err, DynamicsError::StepTooLarge { .. }));
    let rho = StateVector::fock(setup.space, 0).with_ancilla_ground().to_density();
    let neg = lindblad_evolve(&rho, &setup.driven, &CollapseSet::empty(), -1e-6, &EvolveOptions::default());
    assert!(matches!(neg, Err(DynamicsError::NegativeTime(_))));
}

#[test]
fn periodic_maps_agree_with_direct_stepping() {
    let setup = GateSetup::new(Gate::IET, &DeviceParams::paper(), 6, CalibrationMode::Exact).unwrap();
    let period = setup.driven.period().expect("two drives give a periodic frame");
    let noise = NoiseParams::paper();
    let set = CollapseSet::composite(setup.space, &noise);
    let mut ev = Evolver::new(&setup.driven, &set, 0.5e-9).unwrap();
    let rho = setup.code.logical_state(cplx(1.0, 0.0), cplx(1.0, 0.0)).with_ancilla_ground().to_density();
    let t = 2.37 * period;
    let via_map = ev.map(t).unwrap().apply(&rho);
    let direct = ev.evolve_vector(rho.matrix(), 0.0, t);
    assert!((via_map.matrix() - direct).camax() < 1e-9);
    // maps compose
    let two = ev.map(2.0 * period).unwrap();
    let one = ev.map(period).unwrap();
    assert!((two.apply(&rho).matrix() - one.after(&one).apply(&rho).matrix()).camax() < 1e-10);
}

#[test]
fn propagator_examples() {
    let s = HilbertSpace::new(4).unwrap();
    let h1 = random_hermitian(s, &[0.3, -1.1, 0.7, 0.2, 0.9, -0.4, 0.5]);
    let h2 = random_hermitian(s, &[-0.6, 0.8, 0.1, -0.9, 0.35]);
    let segs = [(h1.clone(), 0.7), (h2.clone(), 1.3)];
    let u = propagator(&segs).unwrap();
    assert!((u.matrix() - taylor_product(&segs, 1000)).camax() < 1e-6);
    // non-commuting: order matters
    let rev = propagator(&[(h2, 1.3), (h1, 0.7)]).unwrap();
    assert!((u.matrix() - rev.matrix()).camax() > 1e-3);
    // commuting diagonals: order does not
    let d1 = Operator::cavity_diagonal(s, |n| n as f64);
    let d2 = Operator::cavity_diagonal(s, |n| (n * n) as f64 * 0.3);
    let a = propagator(&[(d1.clone(), 0.4), (d2.clone(), 0.9)]).unwrap();
    let b = propagator(&[(d2, 0.9), (d1, 0.4)]).unwrap();
    assert!((a.matrix() - b.matrix()).camax() < 1e-14);
}

#[test]
fn no_jump_map_examples() {
    let s = HilbertSpace::new(8).unwrap();
    let id = no_jump_map(s, 1e4, 0.0);
    assert!((id.matrix() - CMatrix::identity(8, 8)).camax() < 1e-15);
    let code = binomial_code(s).unwrap();
    let kappa = 1e4;
    let m = no_jump_map(s, kappa, 0.1 / kappa);
    let v = m.matrix() * code.codewords()[0].data();
    assert_abs_diff_eq!(v[4].re / v[0].re, (-0.2f64).exp(), epsilon = 1e-14);
    assert!(v.norm_squared() < 1.0);
}

#[test]
fn trajectory_zero_rates_is_unitary() {
    let setup = et_setup(6);
    let psi = setup.code.logical_state(cplx(1.0, 0.0), cplx(0.0, 1.0)).with_ancilla_ground();
    let t = 0.5e-6;
    let r = trajectory_run(7, &psi, &setup.driven, &CollapseSet::empty(), t, 1e-9).unwrap();
    assert!(r.jumps.is_empty());
    let u = propagator(&[(setup.driven.static_h.clone(), t)]).unwrap();
    let expected = u.matrix() * psi.data();
    assert_abs_diff_eq!(r.final_state.data().dotc(&expected).norm(), 1.0, epsilon = 1e-9);
}

#[test]
fn trajectory_jump_fraction_follows_decay_law() {
    let s = HilbertSpace::new(3).unwrap();
    let noise = NoiseParams::paper();
    let set = CollapseSet::cavity_loss(s, Subsystem::Cavity, &noise);
    let ens = trajectory_ensemble(11, 2000, &StateVector::fock(s, 1), &zero_h(s), &set, noise.cavity_t1, 1e-8).unwrap();
    let frac = ens.jumped as f64 / 2000.0;
    assert_abs_diff_eq!(frac, 1.0 - (-1.0f64).exp(), epsilon = 0.02);
}

#[test]
fn trajectory_average_matches_master_equation() {
    let setup = et_setup(8);
    let noise = NoiseParams::paper();
    let set = CollapseSet::cavity(setup.space, &noise);
    let h = DrivenHamiltonian::from_static(setup.effective.clone());
    let psi = setup.code.logical_state(cplx(1.0, 0.0), cplx(1.0, 0.0));
    let t = 90e-6;
    let opts = EvolveOptions { dt: 10e-9, ..Default::default() };
    let me = lindblad_evolve(&psi.to_density(), &h, &set, t, &opts).unwrap();
    // Single 2000-trajectory batches scatter around 0.01 with a tail past
    // 0.02, so the criterion is applied to the median of five batches.
    let mut td: Vec<f64> = (1..=5u64)
        .map(|b| {
            let ens = trajectory_ensemble(seed_for(2024, b), 2000, &psi, &h, &set, t, 10e-9).unwrap();
            ens.rho.trace_distance(&me.final_state)
        })
        .collect();
    td.sort_by(f64::total_cmp);
    assert!(td[2] < 0.02, "trace distances {td:?}");
}

#[test]
fn seeds_are_split_deterministically() {
    assert_eq!(seed_for(5, 3), seed_for(5, 3));
    assert_ne!(seed_for(5, 3), seed_for(5, 4));
    assert_ne!(seed_for(5, 3), seed_for(6, 3));
}

#[test]
fn jump_tracks_et_versus_kerr() {
    let setup = et_setup(8);
    let a = Operator::cavity_destroy(setup.space);
    let total = 90e-6;
    let c = et_check(&setup.effective, &setup.code, DEFAULT_ET_TOL).unwrap().c();
    let times: Vec<f64> = (0..10).map(|i| total * i as f64 / 9.0).collect();
    let mut phases = Vec::new();
    for &t in &times {
        let tr = conditioned_jump_track(&setup.effective, &setup.code, &a, t, total).unwrap();
        for j in &tr {
            assert_abs_diff_eq!(j.overlap_modulus, 1.0, epsilon = 1e-3);
        }
        phases.push(tr[0].phase);
    }
    // phase = −c(T − t): slope +c, checked between neighbouring samples
    for w in times.windows(2).zip(phases.windows(2)) {
        let slope = (w.1[1] - w.1[0]) / (w.0[1] - w.0[0]);
        assert!((slope / c - 1.0).abs() < 0.05, "slope {slope} vs c {c}");
    }

    let kerr = GateSetup::new(Gate::RKerr, &DeviceParams::paper(), 8, CalibrationMode::Exact).unwrap();
    let worst = [0.0, total / 2.0]
        .iter()
        .flat_map(|&t| conditioned_jump_track(&kerr.effective, &kerr.code, &a, t, total).unwrap())
        .map(|j| (1.0 - j.overlap_modulus).abs())
        .fold(0.0, f64::max);
    assert!(worst > 0.05, "Kerr deviation {worst}");

    let end = conditioned_jump_track(&kerr.effective, &kerr.code, &a, total, total).unwrap();
    assert!(end.iter().all(|j| (j.overlap_modulus - 1.0).abs() < 1e-12));
    let bad = conditioned_jump_track(&kerr.effective, &kerr.code, &a, 2.0 * total, total);
    assert!(matches!(bad, Err(DynamicsError::JumpOutOfRange { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_and_hermiticity_hold_for_random_generators(
        entries in prop::collection::vec(-1.0f64..1.0, 12),
        loss in 0.0f64..2.0,
        deph in 0.0f64..2.0,
    ) {
        let s = HilbertSpace::new(3).unwrap();
        let h = random_hermitian(s, &entries);
        let mut set = CollapseSet::empty();
        set.push(Operator::cavity_destroy(s), loss);
        set.push(Operator::cavity_number(s), deph);
        let rho = StateVector::normalized(s, Subsystem::Cavity,
            etsim_core::qcore::CVector::from_vec(vec![cplx(0.5, 0.1), cplx(0.3, -0.7), cplx(0.2, 0.4)])).unwrap().to_density();
        let opts = EvolveOptions { dt: 2e-3, samples: 5, ..Default::default() };
        let r = lindblad_evolve(&rho, &DrivenHamiltonian::from_static(h), &set, 2.0, &opts).unwrap();
        prop_assert!(r.trace_error < 1e-6);
        prop_assert!(r.hermiticity_error < 1e-6);
    }

    /// ET-satisfying diagonal Hamiltonians make the jump time irrelevant,
    /// and the track phase advances at c.
    #[test]
    fn et_condition_implies_jump_time_independence(
        f1 in -2e4f64..2e4, f2 in -2e4f64..2e4, t_jump in 0.0f64..1e-4,
    ) {
        let s = HilbertSpace::new(8).unwrap();
        let code = binomial_code(s).unwrap();
        let diag = [0.0, f1, f2, f1 - f2, 0.0, 3e3, -7e3, 1e4];
        let h = Operator::cavity_diagonal(s, |n| diag[n]);
        let et = et_check(&h, &code, 1e-6).unwrap();
        prop_assert!(et.satisfied);
        let total = 1e-4;
        let a = Operator::cavity_destroy(s);
        for j in conditioned_jump_track(&h, &code, &a, t_jump, total).unwrap() {
            prop_assert!((j.overlap_modulus - 1.0).abs() < 1e-9);
            let expected = C64::from_polar(1.0, -et.c() * (total - t_jump));
            prop_assert!((C64::from_polar(1.0, j.phase) - expected).norm() < 1e-9);
        }
    }
}
