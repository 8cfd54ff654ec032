use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use etsim_core::model::{hz, to_hz, DeviceParams, NoiseParams};
use etsim_core::recovery::{GrapeOptions, InitialPulse, RecoveryError};
use etsim_core::scenarios::{
    aqec_pulse, et_verify, excitation_sweep, gate_fidelity, pass_sweep, repetitive, wigner_evolution, AqecMode,
    Gate, GateSetup, RepetitiveOptions, ScenarioError,
};
use etsim_core::tomography::square_grid;

use crate::config::{mode_name, ScenarioConfig};

/// Schema tags recorded in the manifest. Bump on any column change.
pub mod schema {
    pub const PASS_SWEEP: &str = "pass_sweep/1";
    pub const ET_VERIFY: &str = "et_verify/1";
    pub const WIGNER_SUMMARY: &str = "wigner_summary/1";
    pub const WIGNER_GRID: &str = "wigner_grid/1";
    pub const GATE_FIDELITY: &str = "gate_fidelity/1";
    pub const REPETITIVE: &str = "repetitive/1";
    pub const REPETITIVE_FITS: &str = "repetitive_fits/1";
    pub const EXCITATION: &str = "excitation/1";
    pub const GRAPE_PULSE: &str = "grape_pulse/1";
    pub const GRAPE_HISTORY: &str = "grape_history/1";
}

pub struct RunContext {
    pub cfg: ScenarioConfig,
    pub params: DeviceParams,
    pub noise: NoiseParams,
    pub out: PathBuf,
    pub seed: u64,
}

pub struct Outcome {
    /// `(file name, schema)` in write order.
    pub outputs: Vec<(String, &'static str)>,
    pub summary: Value,
    /// Set when outputs were written but the run still failed.
    pub failure: Option<anyhow::Error>,
}

impl Outcome {
    fn ok(outputs: Vec<(String, &'static str)>, summary: Value) -> Self {
        Self { outputs, summary, failure: None }
    }
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn us(t: f64) -> f64 {
    t * 1e6
}

fn setup(ctx: &RunContext, gate: Gate) -> Result<GateSetup, ScenarioError> {
    let nominal = ctx.cfg.nominal_drives(gate, &ctx.params);
    log::info!("calibrating {}", gate.name());
    GateSetup::with_nominal(gate, &ctx.params, &nominal, ctx.cfg.simulation.cavity_dim, ctx.cfg.calibration())
}

fn setups(ctx: &RunContext) -> Result<Vec<GateSetup>> {
    let gates = ctx.cfg.gates()?;
    let out: Result<Vec<_>, ScenarioError> = gates.par_iter().map(|&g| setup(ctx, g)).collect();
    Ok(out?)
}

/// Model amplitude per listed amplitude: explicit, or the R_ET calibration scale.
fn amplitude_scale(ctx: &RunContext, explicit: Option<f64>) -> Result<f64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    let s = setup(ctx, Gate::RET)?;
    Ok(s.calibration.as_ref().and_then(|c| c.scales.first().copied()).unwrap_or(1.0))
}

#[derive(Serialize)]
struct PassRow {
    amplitude_over_chi: f64,
    amplitude_over_2pi_hz: f64,
    n: usize,
    f_n_hz_exact: f64,
    f_n_hz_perturbative: f64,
}

pub fn cmd_pass_sweep(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.pass_sweep;
    let chi = ctx.params.chi;
    let amps: Vec<f64> = (0..b.points)
        .map(|k| if b.points > 1 { b.omega_max_over_chi * chi * k as f64 / (b.points - 1) as f64 } else { 0.0 })
        .collect();
    let scale = amplitude_scale(ctx, b.amplitude_scale)?;
    let rows = pass_sweep(&ctx.params, b.delta_over_chi * chi, &amps, scale)?;
    let out: Vec<PassRow> = rows
        .iter()
        .map(|r| PassRow {
            amplitude_over_chi: r.amplitude / chi,
            amplitude_over_2pi_hz: to_hz(r.amplitude),
            n: r.n,
            f_n_hz_exact: to_hz(r.f_exact),
            f_n_hz_perturbative: to_hz(r.f_perturbative),
        })
        .collect();
    write_csv(&ctx.out, "pass_sweep.csv", &out)?;
    let f = |n: usize| out.iter().find(|r| r.n == n).map(|r| r.f_n_hz_exact);
    let summary = json!({
        "amplitude_scale": scale,
        "rows": out.len(),
        "kerr_only_f3_hz": f(3),
    });
    Ok(Outcome::ok(vec![("pass_sweep.csv".into(), schema::PASS_SWEEP)], summary))
}

fn relations(f: &[f64]) -> (f64, f64) {
    ((f[4] - f[2]) - (f[3] - f[1]), f[4] / 2.0 - f[2])
}

pub fn cmd_et_verify(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.et_verify;
    let setups = setups(ctx)?;
    let reports: Result<Vec<_>, ScenarioError> =
        setups.par_iter().map(|s| et_verify(s, b.total_s, b.jump_times, b.ramsey_samples)).collect();
    let mut gates = Vec::new();
    let mut summary = serde_json::Map::new();
    for (s, r) in setups.iter().zip(reports?) {
        let (et_rel, idle_rel) = relations(&r.fock_frequencies);
        let hzv = |v: &[f64]| v.iter().map(|w| to_hz(*w)).collect::<Vec<_>>();
        let cal = s.calibration.as_ref().map(|c| {
            json!({
                "scales": c.scales,
                "et_residual_hz": to_hz(c.et_residual),
                "idle_residual_hz": to_hz(c.idle_residual),
            })
        });
        let jt = &r.jump_track;
        gates.push(json!({
            "gate": s.gate.name(),
            "drives": s.drives.iter().map(|d| json!({
                "omega_over_2pi_hz": to_hz(d.omega),
                "delta_over_2pi_hz": to_hz(d.delta_d),
            })).collect::<Vec<_>>(),
            "calibration": cal,
            "frame_offset_hz": to_hz(r.frame_offset),
            "fock_frequencies_hz": hzv(&r.fock_frequencies),
            "et_relation_hz": to_hz(et_rel),
            "idle_relation_hz": to_hz(idle_rel),
            "k_prime_hz": to_hz(r.k_prime),
            "c_hz": to_hz(r.c),
            "logical_rate_hz": to_hz(s.logical_rate),
            "violations": {
                "et_satisfied": r.et.satisfied,
                "worst_hz": to_hz(r.et.worst_violation),
                "commutator": r.et.commutator_violation,
                "block_residual_hz": to_hz(r.blocks.residual),
            },
            "jump_track": {
                "total_us": us(jt.total),
                "jump_times_us": jt.jump_times.iter().map(|t| us(*t)).collect::<Vec<_>>(),
                "overlaps": jt.overlaps,
                "phases_rad": jt.phases,
                "max_deviation": jt.max_deviation,
                "phase_slope_hz": to_hz(jt.phase_slope),
            },
            "ramsey": {
                "code_frequency_hz": to_hz(r.ramsey.code_frequency),
                "error_frequency_hz": to_hz(r.ramsey.error_frequency),
                "difference_hz": to_hz(r.ramsey.error_frequency - r.ramsey.code_frequency),
            },
        }));
        summary.insert(
            s.gate.name().into(),
            json!({
                "k_prime_hz": to_hz(r.k_prime),
                "c_hz": to_hz(r.c),
                "et_relation_hz": to_hz(et_rel),
                "jump_max_deviation": jt.max_deviation,
            }),
        );
    }
    write_json(&ctx.out, "et_verify.json", &json!({ "schema": schema::ET_VERIFY, "gates": gates }))?;
    Ok(Outcome::ok(vec![("et_verify.json".into(), schema::ET_VERIFY)], Value::Object(summary)))
}

#[derive(Serialize)]
struct WignerSummaryRow {
    gate: &'static str,
    time_us: f64,
    branch: &'static str,
    probability: f64,
    purity: f64,
    phase_rad: f64,
}

#[derive(Serialize)]
struct WignerGridRow {
    gate: &'static str,
    time_us: f64,
    branch: &'static str,
    re_alpha: f64,
    im_alpha: f64,
    w: f64,
}

pub fn cmd_wigner_evolution(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.wigner;
    let grid = if b.grid_points > 0 { square_grid(b.grid_extent, b.grid_points) } else { vec![] };
    let setups = setups(ctx)?;
    let frames: Result<Vec<_>, ScenarioError> = setups
        .par_iter()
        .map(|s| wigner_evolution(s, &ctx.noise, &b.times_s, &grid, ctx.cfg.simulation.dt_s))
        .collect();
    let mut summary_rows = Vec::new();
    let mut grid_rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for (s, frames) in setups.iter().zip(frames?) {
        let gate = s.gate.name();
        let mut purities = serde_json::Map::new();
        for f in &frames {
            summary_rows.push(WignerSummaryRow {
                gate,
                time_us: us(f.time),
                branch: f.branch.name(),
                probability: f.probability,
                purity: f.purity,
                phase_rad: f.phase,
            });
            if let Some(m) = &f.map {
                for (a, w) in m.points.iter().zip(&m.values) {
                    grid_rows.push(WignerGridRow {
                        gate,
                        time_us: us(f.time),
                        branch: f.branch.name(),
                        re_alpha: a.re,
                        im_alpha: a.im,
                        w: *w,
                    });
                }
            }
            purities.insert(format!("{}_{:.0}us", f.branch.name(), us(f.time)), json!(f.purity));
        }
        summary.insert(gate.into(), Value::Object(purities));
    }
    write_csv(&ctx.out, "wigner_summary.csv", &summary_rows)?;
    let mut outputs = vec![("wigner_summary.csv".to_string(), schema::WIGNER_SUMMARY)];
    if !grid.is_empty() {
        write_csv(&ctx.out, "wigner_grid.csv", &grid_rows)?;
        outputs.push(("wigner_grid.csv".into(), schema::WIGNER_GRID));
    }
    Ok(Outcome::ok(outputs, Value::Object(summary)))
}

#[derive(Serialize)]
struct FidelityCsvRow {
    gate: &'static str,
    mode: &'static str,
    t_g_us: f64,
    f_total: f64,
    f_code: f64,
    f_error: f64,
    p_no_error: f64,
    phase_rad: f64,
    avg_fidelity: f64,
}

pub fn cmd_gate_fidelity(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.gate_fidelity;
    let setups = setups(ctx)?;
    let jobs: Vec<(&GateSetup, AqecMode)> =
        setups.iter().flat_map(|s| b.mode.modes().into_iter().map(move |m| (s, m))).collect();
    let results: Result<Vec<_>, ScenarioError> = jobs
        .par_iter()
        .map(|(s, m)| gate_fidelity(s, &ctx.noise, &b.tg_s, *m, ctx.cfg.simulation.dt_s))
        .collect();
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    for ((s, m), res) in jobs.iter().zip(results?) {
        for r in &res {
            rows.push(FidelityCsvRow {
                gate: s.gate.name(),
                mode: mode_name(*m),
                t_g_us: us(r.tg),
                f_total: r.f_total,
                f_code: r.f_code,
                f_error: r.f_error,
                p_no_error: r.p_no_error,
                phase_rad: r.phase,
                avg_fidelity: r.avg_fidelity,
            });
        }
        let slope = etsim_core::scenarios::fit_frequency(
            &res.iter().map(|r| r.tg).collect::<Vec<_>>(),
            &res.iter().map(|r| r.phase).collect::<Vec<_>>(),
        );
        summary.insert(format!("{}_{}", s.gate.name(), mode_name(*m)), json!({ "phase_slope_hz": to_hz(slope) }));
    }
    write_csv(&ctx.out, "gate_fidelity.csv", &rows)?;
    Ok(Outcome::ok(vec![("gate_fidelity.csv".into(), schema::GATE_FIDELITY)], Value::Object(summary)))
}

#[derive(Serialize)]
struct RepetitiveRow {
    gate: &'static str,
    aqec: &'static str,
    cycle: usize,
    t_us: f64,
    fidelity: f64,
}

#[derive(Serialize)]
struct FitRow {
    gate: &'static str,
    aqec: &'static str,
    interval_us: f64,
    lifetime_us: Option<f64>,
    amplitude: Option<f64>,
    floor: f64,
    residual: Option<f64>,
}

pub fn cmd_repetitive(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.repetitive;
    let setups = setups(ctx)?;
    let mut jobs: Vec<(&GateSetup, Option<AqecMode>)> = Vec::new();
    for s in &setups {
        for m in b.mode.modes() {
            jobs.push((s, Some(m)));
        }
        if b.include_no_aqec {
            jobs.push((s, None));
        }
    }
    let interval = |s: &GateSetup| b.interval_s.unwrap_or_else(|| s.gate.repetition_interval());
    let runs: Result<Vec<_>, ScenarioError> = jobs
        .par_iter()
        .map(|(s, m)| {
            let opts = RepetitiveOptions {
                interval: interval(s),
                n_cycles: b.n_cycles,
                with_aqec: m.is_some(),
                mode: m.unwrap_or(AqecMode::Ideal),
                dt: ctx.cfg.simulation.dt_s,
            };
            repetitive(s, &ctx.noise, &opts)
        })
        .collect();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut summary = serde_json::Map::new();
    for ((s, m), run) in jobs.iter().zip(runs?) {
        let aqec = m.map_or("none", mode_name);
        for (c, (t, f)) in run.times.iter().zip(&run.fidelities).enumerate() {
            rows.push(RepetitiveRow { gate: s.gate.name(), aqec, cycle: c, t_us: us(*t), fidelity: *f });
        }
        let lifetime_us = run.fit.map(|f| us(f.lifetime));
        fits.push(FitRow {
            gate: s.gate.name(),
            aqec,
            interval_us: us(interval(s)),
            lifetime_us,
            amplitude: run.fit.map(|f| f.amplitude),
            floor: etsim_core::tomography::DEPOLARIZED_FLOOR,
            residual: run.fit.map(|f| f.residual),
        });
        summary.insert(format!("{}_{}_lifetime_us", s.gate.name(), aqec), json!(lifetime_us));
    }
    write_csv(&ctx.out, "repetitive.csv", &rows)?;
    write_csv(&ctx.out, "repetitive_fits.csv", &fits)?;
    Ok(Outcome::ok(
        vec![
            ("repetitive.csv".into(), schema::REPETITIVE),
            ("repetitive_fits.csv".into(), schema::REPETITIVE_FITS),
        ],
        Value::Object(summary),
    ))
}

#[derive(Serialize)]
struct ExcitationCsvRow {
    amplitude_over_2pi_hz: f64,
    n: usize,
    p_excited: f64,
}

pub fn cmd_excitation_sweep(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.excitation;
    let scale = amplitude_scale(ctx, b.amplitude_scale)?;
    let amps: Vec<f64> = b.omega_over_2pi_hz.iter().map(|f| hz(*f)).collect();
    let rows = excitation_sweep(
        &ctx.params,
        &ctx.noise,
        b.delta_over_chi * ctx.params.chi,
        &amps,
        scale,
        &b.focks,
        ctx.cfg.simulation.cavity_dim,
        b.duration_s,
        ctx.cfg.simulation.dt_s,
    )?;
    let out: Vec<ExcitationCsvRow> = rows
        .iter()
        .map(|r| ExcitationCsvRow { amplitude_over_2pi_hz: to_hz(r.amplitude), n: r.n, p_excited: r.p_excited })
        .collect();
    write_csv(&ctx.out, "excitation.csv", &out)?;
    Ok(Outcome::ok(vec![("excitation.csv".into(), schema::EXCITATION)], json!({ "amplitude_scale": scale })))
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    fidelity: f64,
}

pub fn cmd_grape_aqec(ctx: &RunContext) -> Result<Outcome> {
    let b = &ctx.cfg.grape;
    let opts = GrapeOptions {
        max_iter: b.max_iter,
        target: b.target,
        initial: if b.initial_scale > 0.0 { InitialPulse::Random { scale: b.initial_scale } } else { InitialPulse::Zero },
        seed: ctx.seed,
        ..Default::default()
    };
    let (_, res) = aqec_pulse(
        &ctx.params,
        ctx.noise.kappa_a(),
        b.elapsed_s,
        b.cavity_dim,
        (hz(b.ancilla_bound_over_2pi_hz), hz(b.cavity_bound_over_2pi_hz)),
        b.segments,
        b.duration_s,
        &opts,
    )?;
    res.pulse.write_csv(&ctx.out.join("grape_pulse.csv"))?;
    let hist: Vec<HistoryRow> =
        res.history.iter().enumerate().map(|(i, f)| HistoryRow { iteration: i, fidelity: *f }).collect();
    write_csv(&ctx.out, "grape_history.csv", &hist)?;
    let summary = json!({
        "fidelity": res.fidelity,
        "iterations": res.iterations,
        "converged": res.converged,
    });
    let failure = (!res.converged).then(|| {
        anyhow::Error::new(RecoveryError::NotConverged {
            target: b.target,
            best: res.fidelity,
            iterations: res.iterations,
        })
    });
    Ok(Outcome {
        outputs: vec![
            ("grape_pulse.csv".into(), schema::GRAPE_PULSE),
            ("grape_history.csv".into(), schema::GRAPE_HISTORY),
        ],
        summary,
        failure,
    })
}
