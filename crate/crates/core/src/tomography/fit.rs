use super::TomographyError;

/// Process fidelity of the fully depolarized qubit channel.
pub const DEPOLARIZED_FLOOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    /// Decay time in the units of the input times. Infinite for a flat series.
    pub lifetime: f64,
    pub amplitude: f64,
    pub floor: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> f64 {
        if self.lifetime.is_infinite() {
            self.floor + self.amplitude
        } else {
            self.floor + self.amplitude * (-t / self.lifetime).exp()
        }
    }
}

/// Least-squares fit of `floor + A e^{−t/τ}` with the floor held fixed.
///
/// Starts from a log-linear fit and refines `(A, 1/τ)` by Gauss-Newton. A
/// series that does not decay gives `τ = ∞`.
pub fn fit_exponential(times: &[f64], values: &[f64], floor: f64) -> Result<ExpFit, TomographyError> {
    const NEED: usize = 4;
    if times.len() != values.len() {
        return Err(TomographyError::Degenerate("length mismatch".into()));
    }
    if times.len() < NEED {
        return Err(TomographyError::TooFewSamples { need: NEED, got: times.len() });
    }
    let t_span = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - times.iter().cloned().fold(f64::INFINITY, f64::min);
    if t_span <= 0.0 {
        return Err(TomographyError::Degenerate("all samples at the same time".into()));
    }

    // log-linear start on the points above the floor
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &y)| y - floor > 1e-12)
        .map(|(&t, &y)| (t, (y - floor).ln()))
        .collect();
    let (mut amp, mut rate) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
        let (mt, my) = (st / n, sy / n);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, y) in &pts {
            sxy += (t - mt) * (y - my);
            sxx += (t - mt) * (t - mt);
        }
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        ((my - slope * mt).exp(), (-slope).max(0.0))
    } else {
        (values[0] - floor, 1.0 / t_span)
    };

    let sse = |a: f64, k: f64| -> f64 {
        times.iter().zip(values).map(|(&t, &y)| (floor + a * (-k * t).exp() - y).powi(2)).sum()
    };
    let mut cost = sse(amp, rate);
    for _ in 0..200 {
        // normal equations for (A, k)
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&t, &y) in times.iter().zip(values) {
            let e = (-rate * t).exp();
            let r = floor + amp * e - y;
            let j = [e, -amp * t * e];
            for a in 0..2 {
                jtr[a] += j[a] * r;
                for b in 0..2 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let da = -(jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dk = -(jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-6 {
            let (a2, k2) = (amp + step * da, (rate + step * dk).max(0.0));
            let c2 = sse(a2, k2);
            if c2 < cost {
                let rel = (cost - c2) / cost.max(1e-300);
                amp = a2;
                rate = k2;
                cost = c2;
                improved = rel > 1e-14;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let residual = (cost / times.len() as f64).sqrt();
    let lifetime = if rate * t_span < 1e-12 { f64::INFINITY } else { 1.0 / rate };
    Ok(ExpFit { lifetime, amplitude: amp, floor, residual })
}
