//! `tunnelvision`: runs the numerical experiments and writes CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 error, 2 numerically inconclusive.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tunnelvision_core::QuadratureConfig;

use manifest::{OutputDir, RunManifest};

#[derive(Debug, Parser, Serialize)]
#[command(name = "tunnelvision", version, about = "Harmonic measure experiments on hyperbolic 3-space")]
pub struct Cli {
    /// Directory for output files and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TUNNELVISION_THREADS")]
    pub threads: Option<usize>,

    #[command(flatten)]
    pub quad: QuadFlags,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadFlags {
    /// Absolute quadrature tolerance.
    #[arg(long = "tol", global = true, default_value_t = QuadratureConfig::default().tolerance)]
    pub tolerance: f64,
    #[arg(long, global = true, default_value_t = QuadratureConfig::default().max_depth)]
    pub max_depth: u32,
    #[arg(long, global = true, default_value_t = QuadratureConfig::default().cutoff)]
    pub cutoff: f64,
}

impl QuadFlags {
    fn config(&self) -> Result<QuadratureConfig> {
        let c = QuadratureConfig { tolerance: self.tolerance, max_depth: self.max_depth, cutoff: self.cutoff };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Dogbone experiment: report.json and axis_profile.csv.
    Dogbone {
        #[arg(long, allow_negative_numbers = true)]
        eps: f64,
    },
    /// Harmonic measure at one point, printed as `value ± error`.
    Measure {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
        point: Vec<f64>,
    },
    /// Axis profile f(0,0,z) on a log grid: axis_profile.csv.
    Profile {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        zmin: f64,
        #[arg(long)]
        zmax: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Critical point search: verdict.json.
    Critical {
        #[arg(long)]
        domain: PathBuf,
        /// Grid points per axis.
        #[arg(long, default_value_t = 12)]
        grid: usize,
    },
    /// Regular 4g-gon data: polygon.json.
    Polygon {
        #[arg(long)]
        genus: usize,
    },
    /// Orbit or limit-set point cloud of the genus-g surface group.
    Group {
        #[arg(long)]
        genus: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = CloudKind::Limitset)]
        kind: CloudKind,
    },
    /// Green's function evaluations: green.json.
    Green {
        #[command(subcommand)]
        mode: GreenMode,
    },
    /// Search for a quantizable configuration: configuration.json.
    Quantize {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ell: usize,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudKind {
    Orbit,
    Limitset,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMode {
    /// Flux of the gradient through a geodesic sphere about the pole.
    Flux {
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        pole: Vec<f64>,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// G(pole, q) on H³.
    Eval {
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        pole: Vec<f64>,
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        q: Vec<f64>,
    },
    /// Poincaré series over the genus-g side-pairing group.
    Quotient {
        #[arg(long)]
        genus: usize,
        #[arg(long, default_value_t = 6)]
        shells: usize,
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        pole: Vec<f64>,
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        q: Vec<f64>,
    },
}

/// Outcome of a successful run.
pub enum Status {
    Done,
    Inconclusive,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dogbone { .. } => "dogbone",
            Command::Measure { .. } => "measure",
            Command::Profile { .. } => "profile",
            Command::Critical { .. } => "critical",
            Command::Polygon { .. } => "polygon",
            Command::Group { .. } => "group",
            Command::Green { .. } => "green",
            Command::Quantize { .. } => "quantize",
            Command::Replay { .. } => "replay",
        }
    }
}

fn init_threads(n: Option<usize>) -> Result<usize> {
    if let Some(n) = n {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    Ok(rayon::current_num_threads())
}

fn run(argv: Vec<String>) -> Result<Status> {
    let cli = Cli::try_parse_from(std::iter::once("tunnelvision".to_string()).chain(argv.iter().cloned()))?;
    if let Command::Replay { manifest } = &cli.command {
        let text = std::fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest.display()))?;
        // the replayed run writes to the current --out, not the recorded one
        let mut args = strip_out(&m.argv);
        args.push("--out".into());
        args.push(cli.out.display().to_string());
        return run(args);
    }
    let threads = init_threads(cli.threads)?;
    let quad = cli.quad.config()?;
    let start = Instant::now();
    let mut out = OutputDir::create(&cli.out)?;
    let (status, seed) = commands::dispatch(&cli.command, &quad, &mut out)?;
    out.finish(RunManifest {
        command: cli.command.name().to_string(),
        argv,
        parameters: serde_json::to_value(&cli.command)?,
        quadrature: quad,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    })?;
    Ok(status)
}

fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn is_inconclusive(e: &anyhow::Error) -> bool {
    use tunnelvision_core::Error as E;
    matches!(
        e.downcast_ref::<E>(),
        Some(E::NotConverged { .. } | E::SeriesDivergence(_) | E::Divergence(_))
    )
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            if let Some(c) = e.downcast_ref::<clap::Error>() {
                let _ = c.print();
                return if c.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
            }
            eprintln!("error: {e:#}");
            if is_inconclusive(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
