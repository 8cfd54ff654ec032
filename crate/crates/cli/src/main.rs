//! `etsim`: runs the gate simulations from a TOML config and writes CSV/JSON
//! tables plus a `manifest.json` into the output directory.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use etsim_core::code::CodeError;
use etsim_core::dynamics::DynamicsError;
use etsim_core::model::ModelError;
use etsim_core::qcore::QcoreError;
use etsim_core::recovery::RecoveryError;
use etsim_core::scenarios::ScenarioError;

use commands::{Outcome, RunContext};
use config::{ConfigError, ScenarioConfig};
use manifest::{file_sha256, sha256_hex, OutputFile, RunManifest};

#[derive(Parser)]
#[command(name = "etsim", version, about = "Error-transparent gate simulations")]
struct Cli {
    /// TOML scenario config.
    #[arg(long, global = true, default_value = "configs/paper_device.toml")]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Root seed; overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. 0 uses every core.
    #[arg(long, global = true, env = "ETSIM_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fock frequencies against PASS amplitude.
    PassSweep,
    /// ET conditions, logical blocks, jump tracks and the Ramsey pair.
    EtVerify,
    /// Parity-resolved Wigner snapshots of a logical superposition.
    WignerEvolution,
    /// Logical process fidelity against gate time after one recovery.
    GateFidelity,
    /// Repeated gate and recovery cycles with lifetime fits.
    Repetitive,
    /// Ancilla excitation caused by an off-resonant drive.
    ExcitationSweep,
    /// Optimal-control recovery pulse.
    GrapeAqec,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PassSweep => "pass-sweep",
            Command::EtVerify => "et-verify",
            Command::WignerEvolution => "wigner-evolution",
            Command::GateFidelity => "gate-fidelity",
            Command::Repetitive => "repetitive",
            Command::ExcitationSweep => "excitation-sweep",
            Command::GrapeAqec => "grape-aqec",
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::InvalidParams(_) => EXIT_CONFIG,
        ModelError::Calibration(_) => EXIT_CONVERGENCE,
        _ => EXIT_PHYSICS,
    }
}

fn recovery_code(e: &RecoveryError) -> u8 {
    match e {
        RecoveryError::NotConverged { .. } => EXIT_CONVERGENCE,
        RecoveryError::Io(_) => 1,
        _ => EXIT_PHYSICS,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<clap::Error>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<ScenarioError>() {
            return match e {
                ScenarioError::Input(_) => EXIT_CONFIG,
                ScenarioError::Model(m) => model_code(m),
                ScenarioError::Recovery(r) => recovery_code(r),
                _ => EXIT_PHYSICS,
            };
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return model_code(e);
        }
        if let Some(e) = cause.downcast_ref::<RecoveryError>() {
            return recovery_code(e);
        }
        if cause.is::<DynamicsError>() || cause.is::<CodeError>() || cause.is::<QcoreError>() {
            return EXIT_PHYSICS;
        }
    }
    1
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let text = std::fs::read(&cli.config)
        .map_err(|e| ConfigError(format!("{}: {e}", cli.config.display())))?;
    let cfg = ScenarioConfig::load(&cli.config)?;
    let seed = cli.seed.unwrap_or(cfg.simulation.seed);
    let ctx = RunContext { params: cfg.device()?, noise: cfg.noise()?, cfg, out: cli.out.clone(), seed };

    let threads = if cli.threads == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { cli.threads };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("starting worker pool")?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;

    log::info!("{} with config {}", cli.command.name(), cli.config.display());
    let outcome: Outcome = match cli.command {
        Command::PassSweep => commands::cmd_pass_sweep(&ctx),
        Command::EtVerify => commands::cmd_et_verify(&ctx),
        Command::WignerEvolution => commands::cmd_wigner_evolution(&ctx),
        Command::GateFidelity => commands::cmd_gate_fidelity(&ctx),
        Command::Repetitive => commands::cmd_repetitive(&ctx),
        Command::ExcitationSweep => commands::cmd_excitation_sweep(&ctx),
        Command::GrapeAqec => commands::cmd_grape_aqec(&ctx),
    }?;

    let outputs = outcome
        .outputs
        .iter()
        .map(|(file, schema)| {
            Ok(OutputFile { file: file.clone(), schema: schema.to_string(), sha256: file_sha256(&cli.out.join(file))? })
        })
        .collect::<std::io::Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_path: cli.config.display().to_string(),
        config_sha256: sha256_hex(&text),
        seed,
        threads,
        wall_time_s: started.elapsed().as_secs_f64(),
        status: match &outcome.failure {
            None => "ok".into(),
            Some(e) => format!("failed: {e}"),
        },
        outputs,
        summary: outcome.summary,
    };
    manifest.write(&cli.out)?;
    for o in &manifest.outputs {
        println!("{}", cli.out.join(&o.file).display());
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
