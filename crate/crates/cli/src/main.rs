//! `coagss`: compute, verify and evolve self-similar coagulation profiles.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 numerical failure,
//! 3 verification failure.

mod commands;
mod config;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<coagss::Error> for CliError {
    fn from(e: coagss::Error) -> Self {
        use coagss::Error as E;
        match e {
            E::ConstraintViolation(_)
            | E::InvalidRange(_)
            | E::ClassMismatch { .. }
            | E::GridKind { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coagss",
    version,
    about = "Self-similar profiles of Smoluchowski's coagulation equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the profile equation; writes profile JSON and a `y,g` CSV.
    Solve(SolveArgs),
    /// Check a stored profile; prints a verification report.
    Verify(VerifyArgs),
    /// Run the time-dependent equation; streams `t,M0,M1[,distance]`.
    Evolve(EvolveArgs),
    /// Apply a fractional integral or derivative to a uniformly sampled CSV.
    Frac(FracArgs),
}

#[derive(Args, Default)]
struct KernelArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<String>,
    #[arg(long)]
    weight: Option<String>,
    /// Several terms as `alpha:beta:weight,...`; overrides the single-term flags.
    #[arg(long, allow_hyphen_values = true)]
    terms: Option<String>,
}

#[derive(Args, Default)]
struct GridArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    ymin: Option<String>,
    #[arg(long)]
    ymax: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// `key = value` file; flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    mass: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    residual_tol: Option<String>,
    /// Profile JSON path.
    #[arg(short, long)]
    output: Option<String>,
    /// CSV path; defaults to the JSON path with a `.csv` extension.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Profile JSON written by `solve` or `evolve`.
    profile: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    residual_tol: Option<String>,
    /// Report path; stdout when absent.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// `exp` for `e^{-y}`, or a profile JSON placed in the scaling frame at `t0`.
    #[arg(long)]
    initial: Option<String>,
    /// `exp`, a profile JSON, or `none`.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    /// Final time; alternatively `--ratio` sets `(t0 + t) / t0`.
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    ratio: Option<String>,
    /// Fixed step; must stay below the stability bound.
    #[arg(long)]
    dt: Option<String>,
    /// Step as `cfl` times the current stability bound.
    #[arg(long)]
    auto_dt: bool,
    #[arg(long)]
    cfl: Option<String>,
    /// Trajectory row every this many steps.
    #[arg(long)]
    every: Option<String>,
    /// Trajectory CSV path; stdout when absent.
    #[arg(long)]
    trajectory: Option<String>,
    /// Final rescaled state as profile JSON.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Args)]
struct FracArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Two-column CSV on a uniform grid `h, 2h, ..., n h`.
    #[arg(short, long)]
    input: Option<String>,
    #[arg(long)]
    order: Option<String>,
    /// `left` or `right`.
    #[arg(long)]
    side: Option<String>,
    /// `integral` or `derivative`.
    #[arg(long)]
    op: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(short, long)]
    output: Option<String>,
}

fn base(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply(cfg: &mut ExperimentConfig, pairs: &[(&str, &Option<String>)]) {
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, v.clone());
        }
    }
}

impl KernelArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply(
            cfg,
            &[
                ("alpha", &self.alpha),
                ("beta", &self.beta),
                ("weight", &self.weight),
                ("terms", &self.terms),
            ],
        );
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        apply(
            cfg,
            &[("n", &self.n), ("ymin", &self.ymin), ("ymax", &self.ymax)],
        );
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => {
            let mut cfg = base(&a.config)?;
            a.kernel.apply(&mut cfg);
            a.grid.apply(&mut cfg);
            apply(
                &mut cfg,
                &[
                    ("mass", &a.mass),
                    ("tol", &a.tol),
                    ("max_iter", &a.max_iter),
                    ("omega", &a.omega),
                    ("residual_tol", &a.residual_tol),
                    ("output", &a.output),
                    ("csv", &a.csv),
                ],
            );
            commands::solve(&cfg)
        }
        Command::Verify(a) => {
            let mut cfg = base(&a.config)?;
            cfg.set("profile", a.profile.to_string_lossy());
            apply(
                &mut cfg,
                &[("residual_tol", &a.residual_tol), ("output", &a.output)],
            );
            commands::verify(&cfg)
        }
        Command::Evolve(a) => {
            let mut cfg = base(&a.config)?;
            a.kernel.apply(&mut cfg);
            a.grid.apply(&mut cfg);
            apply(
                &mut cfg,
                &[
                    ("initial", &a.initial),
                    ("reference", &a.reference),
                    ("t0", &a.t0),
                    ("t_end", &a.t_end),
                    ("ratio", &a.ratio),
                    ("dt", &a.dt),
                    ("cfl", &a.cfl),
                    ("every", &a.every),
                    ("trajectory", &a.trajectory),
                    ("output", &a.output),
                ],
            );
            if a.auto_dt {
                cfg.set("auto_dt", "true");
            }
            commands::evolve(&cfg)
        }
        Command::Frac(a) => {
            let mut cfg = base(&a.config)?;
            apply(
                &mut cfg,
                &[
                    ("input", &a.input),
                    ("order", &a.order),
                    ("side", &a.side),
                    ("op", &a.op),
                    ("output", &a.output),
                ],
            );
            commands::frac(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
