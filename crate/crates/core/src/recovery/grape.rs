//! Gradient ascent pulse engineering with exact segment gradients.

use std::collections::VecDeque;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{aqec_target, ControlPulse};
use crate::code::CodeSpace;
use crate::model::{build_h0, DeviceParams};
use crate::qcore::{eigh, matmul, CMatrix, HilbertSpace, Operator};

/// Piecewise-constant control problem. Real control `j` multiplies
/// `controls[j]`; consecutive pairs form one complex channel.
#[derive(Debug, Clone)]
pub struct GrapeProblem {
    pub drift: CMatrix,
    pub controls: Vec<CMatrix>,
    /// Amplitude bound per real control, rad/s.
    pub bounds: Vec<f64>,
    pub channels: Vec<String>,
    pub v_in: CMatrix,
    pub v_out: CMatrix,
    pub segments: usize,
    pub duration: f64,
}

impl GrapeProblem {
    pub fn n_params(&self) -> usize {
        self.segments * self.controls.len()
    }

    fn dt(&self) -> f64 {
        self.duration / self.segments as f64
    }

    fn rank(&self) -> f64 {
        self.v_in.ncols() as f64
    }

    fn hamiltonian(&self, x: &[f64], k: usize) -> CMatrix {
        let nc = self.controls.len();
        let mut h = self.drift.clone();
        for j in 0..nc {
            let u = x[k * nc + j] * self.bounds[j];
            if u != 0.0 {
                h += &self.controls[j] * C64::new(u, 0.0);
            }
        }
        h
    }

    /// Full propagator for normalized controls `x`.
    pub fn unitary(&self, x: &[f64]) -> CMatrix {
        let d = self.drift.nrows();
        let mut u = CMatrix::identity(d, d);
        for k in 0..self.segments {
            let (_, uk) = segment(&self.hamiltonian(x, k), self.dt());
            u = matmul(&uk, &u);
        }
        u
    }

    pub fn pulse(&self, x: &[f64]) -> ControlPulse {
        let nc = self.controls.len();
        let amplitudes = (0..self.segments)
            .map(|k| {
                (0..self.channels.len())
                    .map(|c| {
                        let re = x[k * nc + 2 * c] * self.bounds[2 * c];
                        let im = x.get(k * nc + 2 * c + 1).map_or(0.0, |v| v * self.bounds[2 * c + 1]);
                        C64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        ControlPulse { segment_duration: self.dt(), channels: self.channels.clone(), amplitudes }
    }
}

struct Eig {
    values: Vec<f64>,
    vectors: CMatrix,
}

fn segment(h: &CMatrix, dt: f64) -> (Eig, CMatrix) {
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (k, l) in values.iter().enumerate() {
        let ph = C64::from_polar(1.0, -l * dt);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= ph);
    }
    let u = matmul(&scaled, &vectors.adjoint());
    (Eig { values, vectors }, u)
}

/// `Φ = |Tr[V_out† U V_in]|² / r²`.
pub fn grape_fidelity(problem: &GrapeProblem, x: &[f64]) -> f64 {
    let u = problem.unitary(x);
    let g = (problem.v_out.adjoint() * u * &problem.v_in).trace();
    g.norm_sqr() / (problem.rank() * problem.rank())
}

/// Fidelity and its gradient with respect to the normalized controls.
pub fn grape_gradient(problem: &GrapeProblem, x: &[f64]) -> (f64, Vec<f64>) {
    let dt = problem.dt();
    let n = problem.segments;
    let nc = problem.controls.len();
    let mut eigs = Vec::with_capacity(n);
    let mut units = Vec::with_capacity(n);
    for k in 0..n {
        let (e, u) = segment(&problem.hamiltonian(x, k), dt);
        eigs.push(e);
        units.push(u);
    }
    // forward[k] = U_k ... U_1 V_in, with forward[0] = V_in
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(problem.v_in.clone());
    for u in &units {
        let next = matmul(u, forward.last().expect("forward"));
        forward.push(next);
    }
    // backward[k] = V_out† U_n ... U_{k+1}, with backward[n] = V_out†
    let mut backward = vec![CMatrix::zeros(0, 0); n + 1];
    backward[n] = problem.v_out.adjoint();
    for k in (0..n).rev() {
        backward[k] = matmul(&backward[k + 1], &units[k]);
    }
    let g = (&backward[n] * &forward[n]).trace();
    let r2 = problem.rank() * problem.rank();
    let fid = g.norm_sqr() / r2;
    let mut grad = vec![0.0; n * nc];
    for k in 0..n {
        let Eig { values, vectors } = &eigs[k];
        let d = values.len();
        let gamma = CMatrix::from_fn(d, d, |a, b| {
            let (la, lb) = (values[a], values[b]);
            let ea = C64::from_polar(1.0, -la * dt);
            if (la - lb).abs() * dt < 1e-9 {
                let eb = C64::from_polar(1.0, -lb * dt);
                (ea + eb) * C64::new(0.0, -0.5 * dt)
            } else {
                (ea - C64::from_polar(1.0, -lb * dt)) / (la - lb)
            }
        });
        // Y = W† X_{k−1} B_k W
        let y = matmul(&matmul(&vectors.adjoint(), &matmul(&forward[k], &backward[k + 1])), vectors);
        for j in 0..nc {
            let m = matmul(&matmul(&vectors.adjoint(), &problem.controls[j]), vectors);
            let mut dg = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    dg += gamma[(a, b)] * m[(a, b)] * y[(b, a)];
                }
            }
            grad[k * nc + j] = 2.0 * (g.conj() * dg).re / r2 * problem.bounds[j];
        }
    }
    (fid, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPulse {
    Zero,
    /// Uniform in `[−scale, scale]` of each bound.
    Random { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrapeOptions {
    pub max_iter: usize,
    /// Stop once this fidelity is reached.
    pub target: f64,
    pub initial: InitialPulse,
    pub seed: u64,
    pub memory: usize,
}

impl Default for GrapeOptions {
    fn default() -> Self {
        Self { max_iter: 2000, target: 0.999, initial: InitialPulse::Random { scale: 0.1 }, seed: 1, memory: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct GrapeResult {
    pub controls: Vec<f64>,
    pub pulse: ControlPulse,
    pub fidelity: f64,
    /// Fidelity after each accepted step, starting with the initial pulse.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
}

/// Maximizes Φ by projected L-BFGS with Armijo backtracking inside the box
/// `|u_j| ≤ bound_j`. The history is non-decreasing because only improving
/// steps are accepted.
pub fn grape_optimize(problem: &GrapeProblem, opts: &GrapeOptions) -> GrapeResult {
    let np = problem.n_params();
    let mut x = match opts.initial {
        InitialPulse::Zero => vec![0.0; np],
        InitialPulse::Random { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..np).map(|_| rng.random_range(-scale..=scale)).collect()
        }
    };
    let (mut fid, g) = grape_gradient(problem, &x);
    // Minimize f = 1 − Φ.
    let mut grad: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut history = vec![fid];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while iterations < opts.max_iter && fid < opts.target {
        iterations += 1;
        // Two-loop recursion.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = mem.back().map_or_else(
            || 0.1 / grad.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&dir, &grad) >= 0.0 {
            mem.clear();
            let scale = 0.1 / grad.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            dir = grad.iter().map(|v| -v * scale).collect();
        }
        let f0 = 1.0 - fid;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            project(&mut trial);
            let dx: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&grad, &dx);
            if decrease < 0.0 {
                let (ft, gt) = grape_gradient(problem, &trial);
                if 1.0 - ft <= f0 + 1e-4 * decrease {
                    accepted = Some((trial, ft, gt, dx));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt, dx)) = accepted else {
            if mem.is_empty() {
                break;
            }
            mem.clear();
            continue;
        };
        let new_grad: Vec<f64> = gt.iter().map(|v| -v).collect();
        let dy: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&dx, &dy);
        if sy > 1e-16 {
            mem.push_back((dx, dy, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        x = trial;
        fid = ft;
        grad = new_grad;
        history.push(fid);
    }
    GrapeResult {
        pulse: problem.pulse(&x),
        controls: x,
        fidelity: fid,
        history,
        iterations,
        converged: fid >= opts.target,
    }
}

/// Desk-scale recovery problem: drift `H₀`, ancilla I/Q and cavity I/Q
/// controls, target from [`aqec_target`].
pub fn aqec_grape_problem(
    code: &CodeSpace,
    params: &DeviceParams,
    kappa_a: f64,
    elapsed: f64,
    ancilla_bound: f64,
    cavity_bound: f64,
    segments: usize,
    duration: f64,
) -> GrapeProblem {
    let space: HilbertSpace = code.space();
    let drift = build_h0(params, space).into_matrix();
    let a = Operator::cavity_destroy(space).on_composite().into_matrix();
    let ad = a.adjoint();
    let i = C64::new(0.0, 1.0);
    let controls = vec![
        Operator::sigma_x(space).on_composite().into_matrix(),
        Operator::sigma_y(space).on_composite().into_matrix(),
        &a + &ad,
        (&ad - &a) * i,
    ];
    let target = aqec_target(code, kappa_a, elapsed);
    GrapeProblem {
        drift,
        controls,
        bounds: vec![ancilla_bound, ancilla_bound, cavity_bound, cavity_bound],
        channels: vec!["ancilla".into(), "cavity".into()],
        v_in: target.inputs,
        v_out: target.outputs,
        segments,
        duration,
    }
}
