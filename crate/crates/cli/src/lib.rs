//! `lambda4wm` command line.
//!
//! Every subcommand takes `--config <json>` and `--out <dir>`, writes its
//! outputs into the directory together with `manifest.json`, and exits with
//! 0 on success, 1 on invalid input or I/O failure, 2 on numerical failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lambda4wm_core::{Error, Result};
use serde_json::{json, Value};

pub use config::Config;

#[derive(Debug, Parser)]
#[command(name = "lambda4wm", version, about = "Four-wave mixing gains in a double-lambda vapor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Susceptibilities over a detuning axis (chi.csv).
    Chi(JobArgs),
    /// Output fields and gains at one point (propagate.json).
    Propagate(JobArgs),
    /// Gain grid over detuning and angle or mismatch (gainmap.csv, gainmap.json).
    Gainmap(JobArgs),
    /// Gains with and without velocity averaging (doppler_gain.csv).
    DopplerGain(JobArgs),
    /// Least-squares fit to a gain dataset (fit.json).
    Fit(JobArgs),
    /// Density-matrix steady state and extracted susceptibilities (oracle.json).
    Oracle(JobArgs),
}

#[derive(Debug, Args)]
struct JobArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 or absent uses all cores.
    #[arg(long, env = "LAMBDA4WM_THREADS")]
    threads: Option<usize>,
    /// Override a config entry, e.g. `--set omega_rabi_gamma=70` or `--set doppler.nodes=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Chi(_) => "chi",
            Command::Propagate(_) => "propagate",
            Command::Gainmap(_) => "gainmap",
            Command::DopplerGain(_) => "doppler-gain",
            Command::Fit(_) => "fit",
            Command::Oracle(_) => "oracle",
        }
    }

    fn args(&self) -> &JobArgs {
        match self {
            Command::Chi(a)
            | Command::Propagate(a)
            | Command::Gainmap(a)
            | Command::DopplerGain(a)
            | Command::Fit(a)
            | Command::Oracle(a) => a,
        }
    }

    fn execute(&self, cfg: &Config, out: &Path) -> Result<commands::Outputs> {
        match self {
            Command::Chi(_) => commands::chi(cfg, out),
            Command::Propagate(_) => commands::propagate(cfg, out),
            Command::Gainmap(_) => commands::gainmap(cfg, out),
            Command::DopplerGain(_) => commands::doppler_gain(cfg, out),
            Command::Fit(_) => commands::fit(cfg, out),
            Command::Oracle(_) => commands::oracle(cfg, out),
        }
    }
}

/// Parses `argv` (program name first), runs the job and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn run(command: &Command) -> Result<()> {
    let start = Instant::now();
    let args = command.args();
    let mut cfg = Config::load(&args.config)?;
    cfg.apply_overrides(&args.overrides)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| config::invalid("threads", e.to_string()))?;
    let outcome = pool.install(|| command.execute(&cfg, &args.out));

    let resolved = commands::params(&cfg).ok().map(|p| Value::Object(p.to_config()));
    let (status, outputs, summary, error) = match &outcome {
        Ok(o) => (
            "ok",
            o.files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect(),
            o.summary.clone(),
            Value::Null,
        ),
        Err(e) => ("failed", Vec::new(), Value::Null, json!(e.to_string())),
    };
    let manifest = json!({
        "tool": "lambda4wm",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": command.name(),
        "status": status,
        "error": error,
        "config_path": absolute(&args.config),
        "output_dir": absolute(&args.out),
        "overrides": args.overrides,
        "config": cfg.doc,
        "resolved_params": resolved,
        "outputs": outputs,
        "summary": summary,
        "threads": pool.current_num_threads(),
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    });
    let path = args.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    outcome.map(|_| ())
}
