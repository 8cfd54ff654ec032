//! Rescaling of nominal drive amplitudes.
//!
//! The quoted amplitudes are ambiguous up to a convention factor, so each
//! drive amplitude is multiplied by a scale chosen either to satisfy the
//! gate's frequency conditions exactly or to best reproduce measured Fock
//! frequencies.

use super::{fock_frequencies, pass_shift_table, DeviceParams, DriveSpec, ModelError, ShiftMethod, N_TRC};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Solve the ET (and, for two drives, idle) conditions exactly.
    Exact,
    /// Least-squares fit of f_1..f_4 to measured values.
    TableFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub mode: CalibrationMode,
    pub drives: Vec<DriveSpec>,
    pub scales: Vec<f64>,
    /// `(f₄−f₂) − (f₃−f₁)`, rad/s.
    pub et_residual: f64,
    /// `f₄/2 − f₂`, rad/s.
    pub idle_residual: f64,
}

/// Fock frequencies f_0..f_4 with Δω = 0 and exact dressed shifts.
fn frequencies(params: &DeviceParams, drives: &[DriveSpec]) -> Result<Vec<f64>, ModelError> {
    let table = pass_shift_table(params, drives, N_TRC, ShiftMethod::ExactDressed)?;
    Ok(fock_frequencies(&params.with_frame_offset(0.0), &table))
}

fn conditions(params: &DeviceParams, drives: &[DriveSpec]) -> Result<(f64, f64), ModelError> {
    let f = frequencies(params, drives)?;
    Ok(((f[4] - f[2]) - (f[3] - f[1]), f[4] / 2.0 - f[2]))
}

fn scaled(nominal: &[DriveSpec], scales: &[f64]) -> Vec<DriveSpec> {
    nominal.iter().zip(scales).map(|(d, s)| d.scaled(*s)).collect()
}

fn finish(
    params: &DeviceParams,
    mode: CalibrationMode,
    nominal: &[DriveSpec],
    scales: Vec<f64>,
) -> Result<Calibration, ModelError> {
    let drives = scaled(nominal, &scales);
    let (et_residual, idle_residual) = conditions(params, &drives)?;
    Ok(Calibration { mode, drives, scales, et_residual, idle_residual })
}

// Largest scale that keeps every drive clear of the resonance and strength limits.
fn max_scale(params: &DeviceParams, nominal: &[DriveSpec]) -> f64 {
    nominal
        .iter()
        .map(|d| {
            if d.omega == 0.0 {
                return f64::INFINITY;
            }
            let closest = (0..=N_TRC).map(|n| d.delta_n(params, n).abs()).fold(f64::INFINITY, f64::min);
            let res = closest / (super::RESONANCE_MARGIN * d.omega);
            let strength = super::MAX_OMEGA_OVER_CHI * params.chi / d.omega;
            res.min(strength) * 0.999
        })
        .fold(f64::INFINITY, f64::min)
}

/// Single-drive ET phase gate: scale solving `(f₄−f₂) − (f₃−f₁) = 0`.
///
/// Takes the smallest positive root.
pub fn calibrate_et_phase(params: &DeviceParams, nominal: &DriveSpec) -> Result<Calibration, ModelError> {
    let nominal = [*nominal];
    let hi = max_scale(params, &nominal).min(10.0);
    let g = |s: f64| conditions(params, &scaled(&nominal, &[s])).map(|c| c.0);
    let steps = 400;
    let mut a = 0.0;
    let mut ga = g(a)?;
    for k in 1..=steps {
        let b = hi * k as f64 / steps as f64;
        let gb = g(b)?;
        if ga == 0.0 || ga.signum() != gb.signum() {
            let (mut lo, mut up, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                let gm = g(mid)?;
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    up = mid;
                }
                if up - lo < 1e-15 * up.max(1.0) {
                    break;
                }
            }
            return finish(params, CalibrationMode::Exact, &nominal, vec![0.5 * (lo + up)]);
        }
        a = b;
        ga = gb;
    }
    Err(ModelError::Calibration("no amplitude satisfies the ET condition".into()))
}

// Damped Newton iteration on a square system with a finite-difference Jacobian.
fn newton(
    x0: Vec<f64>,
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
    tol: f64,
) -> Result<Vec<f64>, ModelError> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for _ in 0..100 {
        if norm(&fx) < tol {
            return Ok(x);
        }
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (fp, fm) = (f(&xp)?, f(&xm)?);
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_iterator(n, fx.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs).ok_or_else(|| ModelError::Calibration("singular Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if let Ok(ft) = f(&trial) {
                if norm(&ft) < norm(&fx) {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-8 {
                return Err(ModelError::Calibration("line search failed".into()));
            }
        }
    }
    if norm(&fx) < tol {
        Ok(x)
    } else {
        Err(ModelError::Calibration(format!("residual {:.3e} after 100 iterations", norm(&fx))))
    }
}

// Best point of a coarse grid over [lo, hi]^n as a Newton starting point.
fn grid_start(
    dims: usize,
    lo: f64,
    hi: f64,
    points: usize,
    cost: &dyn Fn(&[f64]) -> Option<f64>,
) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = points.pow(dims as u32);
    for k in 0..total {
        let mut idx = k;
        let x: Vec<f64> = (0..dims)
            .map(|_| {
                let i = idx % points;
                idx /= points;
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            })
            .collect();
        if let Some(c) = cost(&x) {
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, x));
            }
        }
    }
    best.map(|(_, x)| x)
}

/// Two-drive ET idle gate: scales solving the ET condition and `f₄/2 = f₂`.
pub fn calibrate_et_idle(params: &DeviceParams, nominal: &[DriveSpec; 2]) -> Result<Calibration, ModelError> {
    let hi = max_scale(params, nominal).min(2.0);
    let f = |s: &[f64]| -> Result<Vec<f64>, ModelError> {
        let (a, b) = conditions(params, &scaled(nominal, s))?;
        Ok(vec![a / params.kerr, b / params.kerr])
    };
    let cost = |s: &[f64]| f(s).ok().map(|v| v[0] * v[0] + v[1] * v[1]);
    let x0 = grid_start(2, 0.02 * hi, hi, 50, &cost)
        .ok_or_else(|| ModelError::Calibration("no admissible starting point".into()))?;
    let x = newton(x0, &f, 1e-12)?;
    finish(params, CalibrationMode::Exact, nominal, x)
}

/// Least-squares fit of drive scales to measured Fock frequencies
/// `targets = [f₁, f₂, f₃, f₄]` (rad/s, Δω = 0). With `per_drive` false a
/// single common scale is fitted.
pub fn calibrate_table_fit(
    params: &DeviceParams,
    nominal: &[DriveSpec],
    targets: &[f64; 4],
    per_drive: bool,
) -> Result<Calibration, ModelError> {
    let dims = if per_drive { nominal.len() } else { 1 };
    let expand = |s: &[f64]| -> Vec<f64> { if per_drive { s.to_vec() } else { vec![s[0]; nominal.len()] } };
    let resid = |s: &[f64]| -> Result<Vec<f64>, ModelError> {
        let f = frequencies(params, &scaled(nominal, &expand(s)))?;
        Ok((1..=4).map(|n| (f[n] - targets[n - 1]) / params.kerr).collect())
    };
    let cost = |s: &[f64]| resid(s).ok().map(|r| r.iter().map(|v| v * v).sum::<f64>());
    let hi = max_scale(params, nominal).min(2.0);
    let mut x = grid_start(dims, 0.02 * hi, hi, 60, &cost)
        .ok_or_else(|| ModelError::Calibration("no admissible starting point".into()))?;
    // Gauss-Newton with halving line search.
    for _ in 0..100 {
        let r = resid(&x)?;
        let c0: f64 = r.iter().map(|v| v * v).sum();
        let mut jac = nalgebra::DMatrix::<f64>::zeros(4, dims);
        for j in 0..dims {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (rp, rm) = (resid(&xp)?, resid(&xm)?);
            for i in 0..4 {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = nalgebra::DVector::from_vec(r.clone());
        let jt = jac.transpose();
        let step = (&jt * &jac)
            .lu()
            .solve(&(-(&jt * rv)))
            .ok_or_else(|| ModelError::Calibration("singular normal equations".into()))?;
        let mut lambda = 1.0;
        let mut moved = false;
        while lambda > 1e-8 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if let Some(c) = cost(&trial) {
                if c < c0 {
                    x = trial;
                    moved = c0 - c > 1e-16 * c0.max(1e-30);
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    finish(params, CalibrationMode::TableFit, nominal, expand(&x))
}
