//! Command-line driver: `tomostitch [--config FILE] <subcommand>`.
//!
//! Exit status 0 on success, 2 when the command line or configuration is
//! invalid, 1 when a stage fails. Failures print one JSON error record on
//! stderr.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{ExperimentConfig, StrategyChoice};
pub use pipeline::{
    reconstruct_scene, reconstruct_study, Artifacts, Context, ReconOutput, ReconRow, Scene,
};

use crate::error::{Error, Result};
use crate::plan::Strategy;

#[derive(Debug, Parser)]
#[command(
    name = "tomostitch",
    version,
    about = "Beyond-field-of-view tomography simulations"
)]
pub struct Cli {
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default: config, then $TOMOSTITCH_OUT, then ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the phantom and its full sinogram.
    Phantom,
    /// Sinogram coverage maps of both strategies.
    Coverage,
    /// Data size and dose against truncation ratio.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        truncation_grid: Option<Vec<f64>>,
    },
    /// SOA and LTA reconstructions scored by SSIM.
    Reconstruct {
        #[arg(long)]
        strategy: Option<StrategyChoice>,
        #[arg(long, value_enum)]
        noise: Option<Switch>,
    },
    /// Registration error against photon budget.
    RegisterBudget {
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long)]
        strategy: Option<StrategyChoice>,
    },
    /// LTA registration error against angular downsampling.
    RegisterAngles,
    /// Accumulated offset errors in SOA against LTA.
    PerturbDemo {
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Every stage in sequence.
    All {
        #[arg(long, value_delimiter = ',')]
        truncation_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long)]
        sigma: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Phantom => "phantom",
            Command::Coverage => "coverage",
            Command::Sweep { .. } => "sweep",
            Command::Reconstruct { .. } => "reconstruct",
            Command::RegisterBudget { .. } => "register-budget",
            Command::RegisterAngles => "register-angles",
            Command::PerturbDemo { .. } => "perturb-demo",
            Command::All { .. } => "all",
        }
    }
}

/// Loads the config file (or defaults) and applies the flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    let (grid, budgets, sigma) = match &cli.command {
        Command::Sweep { truncation_grid } => (truncation_grid, &None, None),
        Command::RegisterBudget { budgets, .. } => (&None, budgets, None),
        Command::PerturbDemo { sigma } => (&None, &None, *sigma),
        Command::All {
            truncation_grid,
            budgets,
            sigma,
        } => (truncation_grid, budgets, *sigma),
        _ => (&None, &None, None),
    };
    if let Some(g) = grid {
        cfg.sweep.truncation_grid = g.clone();
    }
    if let Some(b) = budgets {
        cfg.register.budgets = Some(b.clone());
    }
    if let Some(s) = sigma {
        cfg.perturb.sigma = s;
    }
    if let Command::Reconstruct {
        strategy: Some(s), ..
    }
    | Command::RegisterBudget {
        strategy: Some(s), ..
    } = &cli.command
    {
        cfg.scan.strategy = *s;
    }
    if let Command::Reconstruct { noise: Some(n), .. } = &cli.command {
        cfg.noise.enabled = *n == Switch::On;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    threads: Option<usize>,
    config: &'a ExperimentConfig,
    artifacts: Vec<pipeline::ArtifactRecord>,
}

/// Runs one subcommand with a resolved configuration and writes
/// `manifest.json` next to the artifacts.
pub fn run(command: &Command, cfg: ExperimentConfig) -> Result<Artifacts> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::param(e.to_string()))?
    };
    pool.install(|| run_stages(command, cfg))
}

fn run_stages(command: &Command, cfg: ExperimentConfig) -> Result<Artifacts> {
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ctx = Context::new(cfg);
    let mut art = Artifacts::new(&out);
    let strategies: Vec<Strategy> = ctx.cfg.scan.strategy.strategies();
    match command {
        Command::Phantom => pipeline::phantom_stage(&ctx, &mut art)?,
        Command::Coverage => {
            pipeline::coverage_stage(&ctx, &mut art)?;
        }
        Command::Sweep { .. } => {
            pipeline::sweep_stage(&ctx, &mut art)?;
        }
        Command::Reconstruct { .. } => {
            pipeline::reconstruct_stage(&ctx, &mut art, &strategies, ctx.cfg.noise.enabled)?;
        }
        Command::RegisterBudget { .. } => {
            pipeline::register_budget_stage(&ctx, &mut art, &strategies)?;
        }
        Command::RegisterAngles => {
            pipeline::register_angles_stage(&ctx, &mut art)?;
        }
        Command::PerturbDemo { .. } => {
            pipeline::perturb_stage(&ctx, &mut art)?;
        }
        Command::All { .. } => {
            pipeline::phantom_stage(&ctx, &mut art)?;
            pipeline::coverage_stage(&ctx, &mut art)?;
            pipeline::sweep_stage(&ctx, &mut art)?;
            pipeline::reconstruct_stage(&ctx, &mut art, &strategies, ctx.cfg.noise.enabled)?;
            pipeline::register_budget_stage(&ctx, &mut art, &strategies)?;
            pipeline::register_angles_stage(&ctx, &mut art)?;
            pipeline::perturb_stage(&ctx, &mut art)?;
        }
    }
    let manifest = Manifest {
        tool: "tomostitch",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        seed: ctx.cfg.seed,
        threads: ctx.cfg.threads,
        config: &ctx.cfg,
        artifacts: art.records()?,
    };
    crate::io::write_json(out.join("manifest.json"), &manifest)?;
    Ok(art)
}

#[derive(Debug, Serialize)]
struct ErrorRecord {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
}

fn report(err: &Error) {
    let path = match err {
        Error::Config { path, .. } | Error::Io { path, .. } => Some(path.clone()),
        _ => None,
    };
    let rec = ErrorRecord {
        error: err.kind(),
        message: err.to_string(),
        path,
    };
    eprintln!(
        "{}",
        serde_json::to_string(&rec).unwrap_or_else(|_| err.to_string())
    );
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            report(&e);
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(1)
        }
    }
}
