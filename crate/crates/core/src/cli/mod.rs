//! `vsc-lab` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or input, 3 numerical failure
//! (the manifest is still written and records the error).

mod cache;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use cache::{cache_key, CACHE_ENV};
pub use config::{AuditSection, Config, GosSection, Kind, NearFarSection, ProblemSection, TikhonovSection, VscSection};
pub use manifest::{sha256_hex, FileRecord, RunManifest};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "vsc-lab", version, about = "Inverse medium scattering laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Near-field or far-field data of the reference contrast
    Forward,
    /// Geometrical optics solution bounds and the low-frequency coefficient estimate
    GosCheck,
    /// Calibrate the index function constant and validate it on held-out cases
    VscCalibrate,
    /// Stability estimate on random pairs with a given constant
    StabilityCheck,
    /// One Tikhonov reconstruction with the a-priori parameter rule
    Tikhonov,
    /// Tikhonov reconstructions over a list of noise levels
    RateSweep,
    /// Fit and check the near-field versus far-field inequality
    NearToFarCheck,
    /// Lattice sums and the high-frequency splitting inequality
    LatticeAudit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::GosCheck => "gos-check",
            Command::VscCalibrate => "vsc-calibrate",
            Command::StabilityCheck => "stability-check",
            Command::Tikhonov => "tikhonov",
            Command::RateSweep => "rate-sweep",
            Command::NearToFarCheck => "near-to-far-check",
            Command::LatticeAudit => "lattice-audit",
        }
    }
}

/// Command-line values that replace the corresponding configuration entries.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long, short = 'o', global = true, default_value = "vsc-out")]
    pub out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// forward solver grid points per axis
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// measurement radius
    #[arg(long = "radius-R", global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub n_sources: Option<usize>,
    #[arg(long, global = true)]
    pub n_dirs: Option<usize>,
    /// forward solver tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub t_min: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub n_t: Option<usize>,
    #[arg(long, global = true)]
    pub gamma_max: Option<i64>,
    /// comma-separated noise levels
    #[arg(long, global = true, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// index function constant
    #[arg(long = "A", global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<Kind>,
}

impl Overrides {
    pub fn apply(&self, c: &mut Config) {
        fn set<T: Clone>(dst: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *dst = v.clone();
            }
        }
        set(&mut c.solver.grid_size, &self.grid);
        set(&mut c.problem.kappa, &self.kappa);
        set(&mut c.problem.radius, &self.radius);
        set(&mut c.problem.n_sources, &self.n_sources);
        set(&mut c.problem.n_dirs, &self.n_dirs);
        set(&mut c.solver.tolerance, &self.tol);
        set(&mut c.problem.theta, &self.theta);
        set(&mut c.problem.kind, &self.kind);
        set(&mut c.gos.n_t, &self.n_t);
        set(&mut c.gos.gamma_max, &self.gamma_max);
        set(&mut c.tikhonov.deltas, &self.deltas);
        if self.t_min.is_some() {
            c.gos.t_min = self.t_min;
        }
        if self.t_max.is_some() {
            c.gos.t_max = self.t_max;
        }
        if self.a.is_some() {
            c.tikhonov.a = self.a;
        }
        if self.mu.is_some() {
            c.tikhonov.mu = self.mu;
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NotAdmissible(_)
        | Error::CriticalExponent
        | Error::Format(_) => 2,
        Error::NoConvergence { .. } | Error::Numerical(_) | Error::LineSearch(_) | Error::EmptyActiveSet => 3,
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn load_config(o: &Overrides) -> Result<(Config, Vec<FileRecord>), Error> {
    let mut inputs = Vec::new();
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
            inputs.push(FileRecord::new(path, text.as_bytes()));
            Config::from_toml(&text)?
        }
        None => Config::default(),
    };
    o.apply(&mut cfg);
    Ok((cfg.resolve()?, inputs))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<FileRecord> {
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(FileRecord::new(&path, bytes))
}

fn execute(cmd: Command, ctx: &mut commands::Context) -> crate::Result<commands::Outcome> {
    match cmd {
        Command::Forward => commands::forward(ctx),
        Command::GosCheck => commands::gos_check(ctx),
        Command::VscCalibrate => commands::vsc_calibrate(ctx),
        Command::StabilityCheck => commands::stability_check(ctx),
        Command::Tikhonov => commands::tikhonov(ctx),
        Command::RateSweep => commands::rate_sweep_cmd(ctx),
        Command::NearToFarCheck => commands::near_to_far(ctx),
        Command::LatticeAudit => commands::lattice_audit(ctx),
    }
}

fn run_parsed(cli: Cli) -> i32 {
    let name = cli.command.name();
    let (cfg, mut inputs) = match load_config(&cli.opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("vsc-lab {name}: {e}");
            return exit_code(&e);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.opts.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("vsc-lab {name}: cannot start worker pool: {e}");
            return 1;
        }
    };
    let mut ctx = match commands::Context::new(cfg.clone()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("vsc-lab {name}: {e}");
            return exit_code(&e);
        }
    };
    inputs.append(&mut ctx.inputs);
    let result = pool.install(|| execute(cli.command, &mut ctx));
    let dir = &cli.opts.out;
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("vsc-lab {name}: cannot create {}: {e}", dir.display());
        return 1;
    }
    let mut manifest = RunManifest::new(name, &ctx.cfg);
    manifest.inputs = inputs;
    let code = match result {
        Ok(outcome) => {
            for (file, bytes) in &outcome.artifacts {
                match write_file(dir, file, bytes) {
                    Ok(r) => manifest.outputs.push(r),
                    Err(e) => {
                        eprintln!("vsc-lab {name}: cannot write {file}: {e}");
                        return 1;
                    }
                }
            }
            manifest.summary = outcome.summary;
            manifest.timings = outcome.timings;
            println!("{name}: {}", manifest.summary);
            0
        }
        Err(e) => {
            eprintln!("vsc-lab {name}: {e}");
            manifest.status = "failed".into();
            manifest.diagnostics = Some(e.to_string());
            exit_code(&e)
        }
    };
    let text = match serde_json::to_vec_pretty(&manifest) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("vsc-lab {name}: {e}");
            return 1;
        }
    };
    if let Err(e) = write_file(dir, "manifest.json", &text) {
        eprintln!("vsc-lab {name}: cannot write manifest: {e}");
        return 1;
    }
    code
}

/// Parses `args` (including the program name) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_parsed(cli),
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
    }
}
