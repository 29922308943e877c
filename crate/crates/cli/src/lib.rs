//! Command-line front end of the electrometer simulator.
//!
//! Every subcommand reads one config file, writes its outputs into a single
//! directory and records the resolved config in each sidecar, so a sidecar
//! can be fed back as `--config` (or to `replay`) to regenerate the files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, ExperimentConfig, CONFIG_MARKER};

/// Output directory override used when `--out` is absent.
pub const OUT_DIR_ENV: &str = "NVELECTRO_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nvelectro", version, about = "Virtual scanning NV-center electrometer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (sectioned key = value). Sidecars are accepted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [env: NVELECTRO_OUT_DIR, default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pulsed-ODMR spectrum.
    Odmr(Common),
    /// Ramsey train against a sinusoidal signal, with sine fit.
    Ramsey(Common),
    /// Screening response over a list of frequencies.
    LockinSweep(Common),
    /// AC field scan with the tip at rest.
    AcScan(Common),
    /// DC field scan using tip motion.
    DcScan(Common),
    /// Shot-noise sensitivity table.
    Sensitivity(Common),
    /// Electrostatic potential of the device and the field profile.
    SolveField(Common),
    /// Re-runs the command recorded in a sidecar.
    Replay {
        sidecar: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: format!("config error: {e}"),
        }
    }
}

impl From<nvelectro::Error> for CliError {
    fn from(e: nvelectro::Error) -> Self {
        let code = match e {
            nvelectro::Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
            nvelectro::Error::Io(_) => EXIT_FAILURE,
            _ => EXIT_CONFIG,
        };
        let prefix = match code {
            EXIT_CONFIG => "invalid experiment: ",
            _ => "",
        };
        CliError {
            code,
            message: format!("{prefix}{e}"),
        }
    }
}

/// Names accepted in a sidecar's `command=` line.
pub const COMMANDS: [&str; 7] = [
    "odmr",
    "ramsey",
    "lockin-sweep",
    "ac-scan",
    "dc-scan",
    "sensitivity",
    "solve-field",
];

pub fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let (name, common) = match cli.command {
        Command::Odmr(c) => ("odmr", c),
        Command::Ramsey(c) => ("ramsey", c),
        Command::LockinSweep(c) => ("lockin-sweep", c),
        Command::AcScan(c) => ("ac-scan", c),
        Command::DcScan(c) => ("dc-scan", c),
        Command::Sensitivity(c) => ("sensitivity", c),
        Command::SolveField(c) => ("solve-field", c),
        Command::Replay { sidecar, out, threads } => {
            let text = std::fs::read_to_string(&sidecar).map_err(|e| CliError::io(&sidecar, e))?;
            let name = text
                .lines()
                .take_while(|l| *l != CONFIG_MARKER)
                .find_map(|l| l.strip_prefix("command="))
                .and_then(|c| COMMANDS.iter().find(|k| **k == c))
                .ok_or_else(|| CliError::from(ConfigError::key("command", "sidecar names no known command")))?;
            let common = Common {
                config: Some(sidecar),
                out,
                seed: None,
                threads,
            };
            (*name, common)
        }
    };
    run_command(name, &common)
}

/// Runs subcommand `name` with the given flags.
pub fn run_command(name: &str, common: &Common) -> Result<commands::Outcome, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::parse("")?,
    };
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    let resolved = cfg.resolve()?;
    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(ConfigError::key("--threads", "must be at least 1").into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: e.to_string(),
    })?;
    pool.install(|| match name {
        "odmr" => commands::odmr(&cfg, &resolved, &out),
        "ramsey" => commands::ramsey(&cfg, &resolved, &out),
        "lockin-sweep" => commands::lockin(&cfg, &resolved, &out),
        "ac-scan" => commands::ac_scan(&cfg, &resolved, &out),
        "dc-scan" => commands::dc_scan(&cfg, &resolved, &out),
        "sensitivity" => commands::sensitivity(&cfg, &resolved, &out),
        "solve-field" => commands::solve_field(&cfg, &resolved, &out),
        other => Err(ConfigError::key("command", format!("unknown command {other:?}")).into()),
    })
}
