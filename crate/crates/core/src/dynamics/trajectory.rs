use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CollapseSet, DynamicsError, MAX_PHASE_PER_STEP};
use crate::model::DrivenHamiltonian;
use crate::qcore::{expm_general, CMatrix, CVector, DensityMatrix, StateVector};

/// Per-trajectory seed from `(root_seed, index)` via SplitMix64.
pub fn seed_for(root_seed: u64, index: u64) -> u64 {
    let mut z = root_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub channel: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub final_state: StateVector,
    pub jumps: Vec<Jump>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub rho: DensityMatrix,
    /// Number of trajectories with at least one jump.
    pub jumped: usize,
    /// Jumps per channel summed over trajectories.
    pub channel_counts: Vec<usize>,
    pub trajectories: usize,
}

enum Stepper {
    /// Exact non-Hermitian step exponential.
    Static(CMatrix),
    /// RK4 on `ψ̇ = −i H_eff(t) ψ`.
    Rk4 { h: DrivenHamiltonian, damping: CMatrix },
}

struct Engine {
    stepper: Stepper,
    jumps: Vec<CMatrix>,
    steps: usize,
    dt: f64,
}

impl Engine {
    fn new(h: &DrivenHamiltonian, collapse: &CollapseSet, t_total: f64, dt: f64) -> Result<Self, DynamicsError> {
        if t_total < 0.0 {
            return Err(DynamicsError::NegativeTime(t_total));
        }
        let d = h.static_h.dim();
        let steps = if t_total == 0.0 { 0 } else { ((t_total / dt) - 1e-9).ceil().max(1.0) as usize };
        let dt = if steps == 0 { dt } else { t_total / steps as f64 };
        let jumps: Vec<CMatrix> =
            collapse.channels.iter().map(|(op, r)| op.matrix() * C64::new(r.sqrt(), 0.0)).collect();
        let mut damping = CMatrix::zeros(d, d);
        for l in &jumps {
            damping += l.adjoint() * l * C64::new(0.5, 0.0);
        }
        let stepper = if h.is_static() {
            let h_eff = h.static_h.matrix() - &damping * C64::new(0.0, 1.0);
            Stepper::Static(expm_general(&h_eff, C64::new(0.0, -dt)))
        } else {
            let phase = dt * h.norm_bound();
            if phase > MAX_PHASE_PER_STEP {
                return Err(DynamicsError::StepTooLarge { dt, phase, max: MAX_PHASE_PER_STEP });
            }
            Stepper::Rk4 { h: h.clone(), damping }
        };
        Ok(Self { stepper, jumps, steps, dt })
    }

    fn step(&self, t: f64, psi: &CVector) -> CVector {
        match &self.stepper {
            Stepper::Static(m) => m * psi,
            Stepper::Rk4 { h, damping } => {
                let f = |tt: f64, v: &CVector| -> CVector {
                    let heff = h.at(tt) - damping * C64::new(0.0, 1.0);
                    (heff * v) * C64::new(0.0, -1.0)
                };
                let dt = self.dt;
                let k1 = f(t, psi);
                let k2 = f(t + 0.5 * dt, &(psi + &k1 * C64::new(0.5 * dt, 0.0)));
                let k3 = f(t + 0.5 * dt, &(psi + &k2 * C64::new(0.5 * dt, 0.0)));
                let k4 = f(t + dt, &(psi + &k3 * C64::new(dt, 0.0)));
                psi + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
            }
        }
    }

    fn run(&self, seed: u64, psi0: &StateVector) -> TrajectoryResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = psi0.data().clone();
        let mut threshold: f64 = rng.random();
        let mut jumps = Vec::new();
        for s in 0..self.steps {
            let t = s as f64 * self.dt;
            psi = self.step(t, &psi);
            if psi.norm_squared() <= threshold && !self.jumps.is_empty() {
                let candidates: Vec<CVector> = self.jumps.iter().map(|l| l * &psi).collect();
                let weights: Vec<f64> = candidates.iter().map(|v| v.norm_squared()).collect();
                let total: f64 = weights.iter().sum();
                if total > 0.0 {
                    let mut pick = rng.random::<f64>() * total;
                    let mut channel = weights.len() - 1;
                    for (k, w) in weights.iter().enumerate() {
                        if pick < *w {
                            channel = k;
                            break;
                        }
                        pick -= w;
                    }
                    let v = &candidates[channel];
                    psi = v.unscale(v.norm());
                    jumps.push(Jump { time: t + self.dt, channel });
                }
                threshold = rng.random();
            }
        }
        let norm = psi.norm();
        let final_state = StateVector::normalized(psi0.space(), psi0.subsystem(), psi.unscale(norm))
            .expect("trajectory state has nonzero norm");
        TrajectoryResult { final_state, jumps }
    }
}

/// Single quantum-jump trajectory by the waiting-time method.
///
/// Static Hamiltonians use the exact non-Hermitian step exponential, so `dt`
/// only sets the jump-time resolution. Time-dependent ones use RK4 and must
/// satisfy the step-size bound.
pub fn trajectory_run(
    seed: u64,
    psi0: &StateVector,
    h: &DrivenHamiltonian,
    collapse: &CollapseSet,
    t_total: f64,
    dt: f64,
) -> Result<TrajectoryResult, DynamicsError> {
    Ok(Engine::new(h, collapse, t_total, dt)?.run(seed, psi0))
}

/// Average of `n` trajectories seeded by [`seed_for`]. Summation follows the
/// trajectory index, independent of thread scheduling.
pub fn trajectory_ensemble(
    root_seed: u64,
    n: usize,
    psi0: &StateVector,
    h: &DrivenHamiltonian,
    collapse: &CollapseSet,
    t_total: f64,
    dt: f64,
) -> Result<EnsembleResult, DynamicsError> {
    let engine = Engine::new(h, collapse, t_total, dt)?;
    let runs: Vec<TrajectoryResult> =
        (0..n).into_par_iter().map(|i| engine.run(seed_for(root_seed, i as u64), psi0)).collect();
    let d = psi0.data().len();
    let mut rho = CMatrix::zeros(d, d);
    let mut channel_counts = vec![0usize; collapse.channels.len()];
    let mut jumped = 0;
    for r in &runs {
        let v = r.final_state.data();
        rho += v * v.adjoint();
        if !r.jumps.is_empty() {
            jumped += 1;
        }
        for j in &r.jumps {
            channel_counts[j.channel] += 1;
        }
    }
    rho /= C64::new(n.max(1) as f64, 0.0);
    Ok(EnsembleResult {
        rho: DensityMatrix::from_raw(psi0.space(), psi0.subsystem(), rho),
        jumped,
        channel_counts,
        trajectories: n,
    })
}
