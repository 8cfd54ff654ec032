use super::{aqec_cycle, RecoveryError};
use crate::dynamics::Superop;
use crate::model::NoiseParams;
use crate::qcore::{DensityMatrix, Operator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleOptions {
    pub n_cycles: usize,
    /// Apply the recovery cycle after every gate interval.
    pub with_aqec: bool,
}

#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub cycle: usize,
    pub state: DensityMatrix,
    pub p_flag: f64,
}

/// Alternates one gate interval (`gate_map`, the noisy evolution over the
/// interval) with a recovery cycle. Record 0 is the initial state.
pub fn repetitive_schedule(
    rho0: &DensityMatrix,
    gate_map: &Superop,
    unitary: &Operator,
    noise: &NoiseParams,
    opts: &ScheduleOptions,
) -> Result<Vec<CycleRecord>, RecoveryError> {
    let mut out = Vec::with_capacity(opts.n_cycles + 1);
    out.push(CycleRecord { cycle: 0, state: rho0.clone(), p_flag: 0.0 });
    let mut rho = rho0.clone();
    for cycle in 1..=opts.n_cycles {
        rho = gate_map.apply(&rho);
        let mut p_flag = 0.0;
        if opts.with_aqec {
            let outcome = aqec_cycle(&rho, unitary, noise)?;
            p_flag = outcome.p_flag;
            rho = outcome.rho_out;
        }
        out.push(CycleRecord { cycle, state: rho.clone(), p_flag });
    }
    Ok(out)
}
