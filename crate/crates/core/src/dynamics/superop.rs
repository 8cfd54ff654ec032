use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{CollapseSet, DynamicsError, MAX_PHASE_PER_STEP};
use crate::model::DrivenHamiltonian;
use crate::qcore::{matmul, CMatrix, CVector, DensityMatrix, HilbertSpace, Subsystem};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

// Above this vectorized dimension, dense superoperator products are too slow
// and evolution steps the sparse generator directly.
const DENSE_MAP_LIMIT: usize = 576;

/// Compressed-row sparse matrix.
#[derive(Debug, Clone)]
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, cols, vals }
    }

    /// `out += s · A x`.
    fn mul_add(&self, x: &[C64], s: C64, out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o += s * acc;
        }
    }

    fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

fn nonzeros(a: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Triplets of `ρ ↦ s·(A ρ) + s'·(ρ B)`.
fn left_right(d: usize, a: &CMatrix, s: C64, b: &CMatrix, s2: C64, out: &mut Vec<(usize, usize, C64)>) {
    for (i, k, v) in nonzeros(a) {
        for j in 0..d {
            out.push((i + j * d, k + j * d, s * v));
        }
    }
    for (k, j, v) in nonzeros(b) {
        for i in 0..d {
            out.push((i + j * d, i + k * d, s2 * v));
        }
    }
}

/// Lindblad generator `L(t) = L₀ + e^{−iνt} L₊ + e^{iνt} L₋` in vectorized form.
#[derive(Debug, Clone)]
pub struct Generator {
    d: usize,
    space: HilbertSpace,
    subsystem: Subsystem,
    base: Csr,
    modulated: Option<(Csr, Csr, f64)>,
    norm: f64,
}

impl Generator {
    pub fn new(h: &DrivenHamiltonian, collapse: &CollapseSet) -> Self {
        let hs = h.static_h.matrix();
        let d = hs.nrows();
        let i = C64::new(0.0, 1.0);
        let mut sum_ldl = CMatrix::zeros(d, d);
        let mut trip = Vec::new();
        for (op, rate) in &collapse.channels {
            assert_eq!(op.dim(), d, "collapse operator dimension");
            let l = op.matrix() * C64::new(rate.sqrt(), 0.0);
            sum_ldl += l.adjoint() * &l;
            let nz = nonzeros(&l);
            for &(a, k, lv) in &nz {
                for &(b, m, rv) in &nz {
                    trip.push((a + b * d, k + m * d, lv * rv.conj()));
                }
            }
        }
        let h_eff = hs - &sum_ldl * (0.5 * i);
        let h_eff_dag = h_eff.adjoint();
        left_right(d, &h_eff, -i, &h_eff_dag, i, &mut trip);
        let base = Csr::from_triplets(d * d, trip);
        let modulated = h.modulation.as_ref().map(|(v, nu)| {
            let vm = v.matrix();
            let vd = vm.adjoint();
            let mut tp = Vec::new();
            left_right(d, vm, -i, vm, i, &mut tp);
            let mut tm = Vec::new();
            left_right(d, &vd, -i, &vd, i, &mut tm);
            (Csr::from_triplets(d * d, tp), Csr::from_triplets(d * d, tm), *nu)
        });
        Self { d, space: h.space(), subsystem: h.static_h.subsystem(), base, modulated, norm: h.norm_bound() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_static(&self) -> bool {
        self.modulated.is_none()
    }

    pub fn period(&self) -> Option<f64> {
        self.modulated.as_ref().map(|(_, _, nu)| std::f64::consts::TAU / nu.abs())
    }

    /// Hamiltonian norm bound used for the step-size check.
    pub fn hamiltonian_norm(&self) -> f64 {
        self.norm
    }

    /// `out = L(t) x`.
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        self.base.mul_add(x, C64::new(1.0, 0.0), out);
        if let Some((p, m, nu)) = &self.modulated {
            let ph = C64::from_polar(1.0, -nu * t);
            p.mul_add(x, ph, out);
            m.mul_add(x, ph.conj(), out);
        }
    }

    /// One classic RK4 step of `ẋ = L(t) x` in place.
    pub fn rk4_step(&self, t: f64, h: f64, x: &mut [C64], work: &mut RkWork) {
        let n = x.len();
        let RkWork { k, tmp, acc } = work;
        acc.copy_from_slice(x);
        let weights = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        let offsets = [0.0, 0.5, 0.5, 1.0];
        tmp.copy_from_slice(x);
        for stage in 0..4 {
            self.apply(t + offsets[stage] * h, tmp, k);
            for idx in 0..n {
                acc[idx] += k[idx] * (weights[stage] * h);
            }
            if stage < 3 {
                let f = offsets[stage + 1] * h;
                for idx in 0..n {
                    tmp[idx] = x[idx] + k[idx] * f;
                }
            }
        }
        x.copy_from_slice(acc);
    }

    fn check_step(&self, h: f64) -> Result<(), DynamicsError> {
        let phase = h * self.norm;
        if phase > MAX_PHASE_PER_STEP {
            return Err(DynamicsError::StepTooLarge { dt: h, phase, max: MAX_PHASE_PER_STEP });
        }
        Ok(())
    }

    /// Dense `Σ_{k≤4} (hL)^k / k!` for a static generator: exactly one RK4 step.
    fn static_step_matrix(&self, h: f64) -> CMatrix {
        let n = self.d * self.d;
        let l = self.base.to_dense() * C64::new(h, 0.0);
        let id = CMatrix::identity(n, n);
        let mut t = &id + &l * C64::new(0.25, 0.0);
        t = &id + matmul(&l, &t) * C64::new(1.0 / 3.0, 0.0);
        t = &id + matmul(&l, &t) * C64::new(0.5, 0.0);
        &id + matmul(&l, &t)
    }
}

/// Scratch buffers for [`Generator::rk4_step`].
#[derive(Debug, Clone)]
pub struct RkWork {
    k: Vec<C64>,
    tmp: Vec<C64>,
    acc: Vec<C64>,
}

impl RkWork {
    pub fn new(n: usize) -> Self {
        Self { k: vec![ZERO; n], tmp: vec![ZERO; n], acc: vec![ZERO; n] }
    }
}

/// Dense linear map on vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superop {
    pub d: usize,
    pub matrix: CMatrix,
}

impl Superop {
    pub fn identity(d: usize) -> Self {
        Self { d, matrix: CMatrix::identity(d * d, d * d) }
    }

    /// `ρ ↦ K ρ K†`.
    pub fn conjugation(k: &CMatrix) -> Self {
        let d = k.nrows();
        Self { d, matrix: k.conjugate().kronecker(k) }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Superop) -> Superop {
        Superop { d: self.d, matrix: matmul(&self.matrix, &first.matrix) }
    }

    pub fn power(&self, mut n: u64) -> Superop {
        let mut result: Option<CMatrix> = None;
        let mut base = self.matrix.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => matmul(&base, &r),
                });
            }
            n >>= 1;
            if n > 0 {
                base = matmul(&base, &base);
            }
        }
        Superop { d: self.d, matrix: result.unwrap_or_else(|| CMatrix::identity(self.d * self.d, self.d * self.d)) }
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let v = CVector::from_column_slice(rho.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(self.d, self.d, out.as_slice())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_raw(rho.space(), rho.subsystem(), self.apply_matrix(rho.matrix()))
    }
}

// Partial period maps kept for arbitrary end times.
const CHECKPOINTS: usize = 16;

#[derive(Debug)]
struct PeriodMap {
    map: Superop,
    steps: usize,
    every: usize,
    /// Maps after `every`, `2·every`, … steps.
    partial: Vec<Superop>,
}

/// Produces evolution maps for one generator at a fixed step size.
///
/// Static generators use an exact RK4 step matrix raised to the step count.
/// Periodic generators build the one-period map from `M = ceil(T/dt)` RK4
/// steps and raise it to the number of whole periods.
#[derive(Debug)]
pub struct Evolver {
    pub generator: Generator,
    dt: f64,
    period_map: Option<PeriodMap>,
}

impl Evolver {
    pub fn new(h: &DrivenHamiltonian, collapse: &CollapseSet, dt: f64) -> Result<Self, DynamicsError> {
        let generator = Generator::new(h, collapse);
        generator.check_step(dt)?;
        Ok(Self { generator, dt, period_map: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn space(&self) -> HilbertSpace {
        self.generator.space
    }

    pub fn subsystem(&self) -> Subsystem {
        self.generator.subsystem
    }

    fn steps_for(&self, t: f64) -> usize {
        if t <= 0.0 {
            0
        } else {
            ((t / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }

    /// Map over `steps` RK4 steps of size `h` starting at `t0`, built by
    /// propagating every basis element. Also returns the partial maps after
    /// each multiple of `every` steps.
    fn stepped_map(&self, t0: f64, h: f64, steps: usize, every: usize) -> (Superop, Vec<Superop>) {
        let d = self.generator.d;
        let n = d * d;
        let snaps = if every > 0 { (steps - 1) / every } else { 0 };
        let columns: Vec<Vec<Vec<C64>>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut x = vec![ZERO; n];
                x[c] = C64::new(1.0, 0.0);
                let mut work = RkWork::new(n);
                let mut out = Vec::with_capacity(snaps + 1);
                for s in 0..steps {
                    self.generator.rk4_step(t0 + s as f64 * h, h, &mut x, &mut work);
                    if every > 0 && (s + 1) % every == 0 && s + 1 < steps {
                        out.push(x.clone());
                    }
                }
                out.push(x);
                out
            })
            .collect();
        let assemble = |k: usize| {
            let mut m = CMatrix::zeros(n, n);
            for (c, col) in columns.iter().enumerate() {
                for (r, v) in col[k].iter().enumerate() {
                    m[(r, c)] = *v;
                }
            }
            Superop { d, matrix: m }
        };
        let partial = (0..snaps).map(assemble).collect();
        (assemble(snaps), partial)
    }

    fn ensure_period_map(&mut self, period: f64) {
        if self.period_map.is_none() {
            let m = self.steps_for(period);
            let every = m.div_ceil(CHECKPOINTS);
            let (map, partial) = self.stepped_map(0.0, period / m as f64, m, every);
            self.period_map = Some(PeriodMap { map, steps: m, every, partial });
        }
    }

    /// The evolution map over `[0, t]`.
    pub fn map(&mut self, t: f64) -> Result<Superop, DynamicsError> {
        if t < 0.0 {
            return Err(DynamicsError::NegativeTime(t));
        }
        let d = self.generator.d;
        if t == 0.0 {
            return Ok(Superop::identity(d));
        }
        match self.generator.period() {
            None => {
                let steps = self.steps_for(t);
                let h = t / steps as f64;
                self.generator.check_step(h)?;
                Ok(Superop { d, matrix: self.generator.static_step_matrix(h) }.power(steps as u64))
            }
            Some(period) => {
                self.ensure_period_map(period);
                let pm = self.period_map.as_ref().expect("period map");
                let whole = (t / period + 1e-12).floor();
                let rest = t - whole * period;
                let mut out = pm.map.power(whole as u64);
                if rest > 1e-15 * period {
                    // Start from the last checkpoint before `rest`, then step the remainder.
                    let h = period / pm.steps as f64;
                    let done = ((rest / h + 1e-9).floor() as usize / pm.every).min(pm.partial.len());
                    let t_done = (done * pm.every) as f64 * h;
                    if done > 0 {
                        out = pm.partial[done - 1].after(&out);
                    }
                    let remaining = rest - t_done;
                    if remaining > 1e-15 * period {
                        let steps = self.steps_for(remaining);
                        let (tail, _) = self.stepped_map(t_done, remaining / steps as f64, steps, 0);
                        out = tail.after(&out);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Evolves one state over `[0, t]`, using cached maps where they pay off.
    pub fn evolve_state(&mut self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix, DynamicsError> {
        if t < 0.0 {
            return Err(DynamicsError::NegativeTime(t));
        }
        let out = match (self.generator.period(), self.prefers_maps()) {
            (None, true) => return Ok(self.map(t)?.apply(rho)),
            (Some(period), true) => {
                self.ensure_period_map(period);
                let pm = self.period_map.as_ref().expect("period map");
                let whole = (t / period + 1e-12).floor();
                let mut m = rho.matrix().clone();
                for _ in 0..whole as u64 {
                    m = pm.map.apply_matrix(&m);
                }
                let rest = t - whole * period;
                if rest > 1e-15 * period {
                    m = self.evolve_vector(&m, 0.0, rest);
                }
                m
            }
            (_, false) => self.evolve_vector(rho.matrix(), 0.0, t),
        };
        Ok(DensityMatrix::from_raw(rho.space(), rho.subsystem(), out))
    }

    /// Steps a single state without forming a map.
    pub fn evolve_vector(&self, rho: &CMatrix, t0: f64, t: f64) -> CMatrix {
        let d = self.generator.d;
        let steps = self.steps_for(t);
        let mut x: Vec<C64> = rho.as_slice().to_vec();
        if steps == 0 {
            return rho.clone();
        }
        let h = t / steps as f64;
        let mut work = RkWork::new(d * d);
        for s in 0..steps {
            self.generator.rk4_step(t0 + s as f64 * h, h, &mut x, &mut work);
        }
        CMatrix::from_column_slice(d, d, &x)
    }

    pub fn prefers_maps(&self) -> bool {
        self.generator.d * self.generator.d <= DENSE_MAP_LIMIT
    }
}
