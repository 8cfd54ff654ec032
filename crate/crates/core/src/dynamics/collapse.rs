use crate::model::NoiseParams;
use crate::qcore::{HilbertSpace, Operator, Subsystem};

/// Jump operators with rates; the Lindblad operator is `√rate · op`.
#[derive(Debug, Clone, Default)]
pub struct CollapseSet {
    pub channels: Vec<(Operator, f64)>,
}

/// Cavity pure dephasing `√(2/T_φ) a†a` on `subsystem`.
///
/// Coherence between Fock `n` and `m` decays at `(n−m)²/T_φ`.
pub fn cavity_dephasing(space: HilbertSpace, subsystem: Subsystem, tphi: f64) -> (Operator, f64) {
    let num = Operator::cavity_number(space);
    let op = if subsystem == Subsystem::Composite { num.on_composite() } else { num };
    (op, rate(2.0, tphi))
}

fn rate(numerator: f64, time: f64) -> f64 {
    if time.is_finite() {
        numerator / time
    } else {
        0.0
    }
}

impl CollapseSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: Operator, rate: f64) {
        assert!(rate >= 0.0, "collapse rates must be non-negative");
        if rate > 0.0 {
            self.channels.push((op, rate));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Full noise model on the composite space: cavity loss, ancilla decay,
    /// thermal excitation, ancilla dephasing and cavity dephasing.
    pub fn composite(space: HilbertSpace, noise: &NoiseParams) -> Self {
        let mut set = Self::cavity_loss(space, Subsystem::Composite, noise);
        set.push(Operator::ancilla_lowering(space).on_composite(), rate(1.0, noise.qubit_t1));
        set.push(Operator::ancilla_raising(space).on_composite(), thermal_rate(noise));
        set.push(Operator::ancilla_excited(space).on_composite(), rate(2.0, noise.qubit_tphi));
        let (op, r) = cavity_dephasing(space, Subsystem::Composite, noise.cavity_tphi);
        set.push(op, r);
        set
    }

    /// Ancilla decay and thermal excitation only, on the composite space.
    pub fn ancilla_relaxation(space: HilbertSpace, noise: &NoiseParams) -> Self {
        let mut set = Self::empty();
        set.push(Operator::ancilla_lowering(space).on_composite(), rate(1.0, noise.qubit_t1));
        set.push(Operator::ancilla_raising(space).on_composite(), thermal_rate(noise));
        set
    }

    /// Cavity loss `√κ_a a` alone.
    pub fn cavity_loss(space: HilbertSpace, subsystem: Subsystem, noise: &NoiseParams) -> Self {
        let a = Operator::cavity_destroy(space);
        let a = if subsystem == Subsystem::Composite { a.on_composite() } else { a };
        let mut set = Self::empty();
        set.push(a, rate(1.0, noise.cavity_t1));
        set
    }

    /// Cavity loss and dephasing on the cavity space only.
    pub fn cavity(space: HilbertSpace, noise: &NoiseParams) -> Self {
        let mut set = Self::cavity_loss(space, Subsystem::Cavity, noise);
        let (op, r) = cavity_dephasing(space, Subsystem::Cavity, noise.cavity_tphi);
        set.push(op, r);
        set
    }
}

/// Upward rate `κ_q n_th / (1 − n_th)`, giving steady-state population `n_th`.
fn thermal_rate(noise: &NoiseParams) -> f64 {
    rate(1.0, noise.qubit_t1) * noise.n_th / (1.0 - noise.n_th)
}
