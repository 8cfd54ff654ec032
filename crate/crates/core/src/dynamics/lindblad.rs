use super::{CollapseSet, DynamicsError, Evolver, DEFAULT_DT};
use crate::model::DrivenHamiltonian;
use crate::qcore::{eigh, hermitian_violation, CMatrix, DensityMatrix, Operator};

const CLIP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Number of evenly spaced output samples after `t = 0` (at least 1).
    pub samples: usize,
    pub observables: Vec<Operator>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, samples: 1, observables: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_state: DensityMatrix,
    /// Sample times including `t = 0`.
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `expectations[k][s]`: observable `k` at sample `s`.
    pub expectations: Vec<Vec<f64>>,
    /// Largest `|Tr ρ − 1|` over the samples.
    pub trace_error: f64,
    /// Largest anti-Hermitian part over the samples.
    pub hermiticity_error: f64,
    /// Most negative eigenvalue removed by clipping.
    pub clipped: f64,
}

/// Projects small negative eigenvalues to zero; larger ones are kept and logged.
fn clip_positive(m: CMatrix) -> (CMatrix, f64) {
    let (values, vectors) = eigh(&((&m + m.adjoint()).scale(0.5)));
    let min = values[0];
    if min >= 0.0 {
        return (m, 0.0);
    }
    if min < -CLIP_TOL {
        log::warn!("density matrix eigenvalue {min:.3e} below clipping tolerance");
        return (m, 0.0);
    }
    log::debug!("clipping eigenvalue {min:.3e}");
    let tr = m.trace();
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v > 0.0 {
            let col = vectors.column(k);
            out += (col * col.adjoint()).scale(v);
        }
    }
    let scale = tr.re / out.trace().re;
    (out.scale(scale), -min)
}

/// Fixed-step RK4 integration of the Lindblad equation.
///
/// Fails if `dt · ‖H‖ ≥ 0.05`.
pub fn lindblad_evolve(
    rho0: &DensityMatrix,
    h: &DrivenHamiltonian,
    collapse: &CollapseSet,
    t_total: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionResult, DynamicsError> {
    if t_total < 0.0 {
        return Err(DynamicsError::NegativeTime(t_total));
    }
    let mut ev = Evolver::new(h, collapse, opts.dt)?;
    let samples = opts.samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|k| t_total * k as f64 / samples as f64).collect();
    let mut states = vec![rho0.clone()];
    let mut current = rho0.matrix().clone();
    let use_maps = ev.prefers_maps();
    let interval_map = if use_maps && ev.generator.is_static() && samples > 0 {
        Some(ev.map(t_total / samples as f64)?)
    } else {
        None
    };
    let mut clipped: f64 = 0.0;
    for k in 1..=samples {
        let next = if let Some(m) = &interval_map {
            m.apply_matrix(&current)
        } else if use_maps {
            // Periodic generator: maps always start at a period boundary, so
            // evolve the initial state to each sample time.
            ev.evolve_state(rho0, times[k])?.into_matrix()
        } else {
            ev.evolve_vector(&current, times[k - 1], times[k] - times[k - 1])
        };
        let (fixed, c) = clip_positive(next);
        clipped = clipped.max(c);
        current = fixed;
        states.push(DensityMatrix::from_raw(rho0.space(), rho0.subsystem(), current.clone()));
    }
    let trace_error = states.iter().map(|s| (s.matrix().trace().re - 1.0).abs()).fold(0.0, f64::max);
    let hermiticity_error = states.iter().map(|s| hermitian_violation(s.matrix())).fold(0.0, f64::max);
    let expectations = opts
        .observables
        .iter()
        .map(|o| states.iter().map(|s| s.expectation(o)).collect())
        .collect();
    Ok(EvolutionResult {
        final_state: states.last().expect("at least one state").clone(),
        times,
        states,
        expectations,
        trace_error,
        hermiticity_error,
        clipped,
    })
}
