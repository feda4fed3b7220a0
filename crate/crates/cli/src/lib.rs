//! The `shearlet` command-line tool.
//!
//! Machine-readable results go to stdout as `key=value` lines, in a fixed order and
//! without timings, so equal seeds and inputs give byte-identical output. Human
//! oriented notes go to stderr. Exit codes: 0 success, 1 contract violation,
//! 2 usage or file error.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {err}")]
    File { path: PathBuf, err: std::io::Error },
}

#[derive(Debug, Parser)]
#[command(name = "shearlet", version, about = "Shearlet dilation groups from nilpotent algebras")]
pub struct Cli {
    /// Seed for every randomized certificate.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the command's primary tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file: the artifact of `transform`/`wavefront`, a copy of the report otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// An algebra file, or a registered family as `name:dim[:param]`.
#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    /// Exponents `1,λ_2,...,λ_d` as fractions; defaults to the solver's window point.
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate an algebra file.
    Validate { algebra: String },
    /// Solve for compatible diagonal scalings.
    Scalings { algebra: String },
    /// Canonical basis, compatibility and sample matrices.
    Group {
        algebra: String,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
    /// Sampled continuous transform of a 2-d image.
    Transform(TransformArgs),
    /// Decay-based singularity map of a 2-d image.
    Wavefront(WavefrontArgs),
    /// Cone approximation certificate and microlocal admissibility estimates.
    VerifyMicrolocal {
        algebra: String,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Half-width of the target direction window around e_1.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Radius of the target cone.
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
    },
    /// Residuals of the symplectic embedding and the intertwining identity.
    EmbedCheck {
        algebra: String,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Nodes per axis of the coarse half-space grid (default 256 for d=2, 48 for d=3).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 5)]
        pairs: usize,
    },
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// PGM image or CSV grid, mapped onto [-1, 1)^2 with axis 0 running down the rows.
    pub image: PathBuf,
    #[arg(long, default_value = "class2:2")]
    pub group: String,
    #[command(flatten)]
    pub lambda: GroupArgs,
    #[arg(long, default_value_t = 4)]
    pub scales: usize,
    /// Shear lattice radius K; the lattice has 2K+1 points per axis.
    #[arg(long, default_value_t = 2)]
    pub shears: usize,
    #[arg(long, default_value_t = 0.5)]
    pub a0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    pub shear_step: f64,
    #[arg(long, default_value = "meyer")]
    pub window: String,
}

#[derive(Debug, Args)]
pub struct WavefrontArgs {
    pub image: PathBuf,
    #[arg(long, default_value = "class2:2")]
    pub group: String,
    #[command(flatten)]
    pub lambda: GroupArgs,
    #[arg(long, default_value_t = 0.25)]
    pub a0: f64,
    /// Scale ratio; the default is 2^{-1/3}.
    #[arg(long, default_value_t = 0.793_700_525_984_099_8)]
    pub ratio: f64,
    #[arg(long, default_value_t = 7)]
    pub scales: usize,
    #[arg(long, default_value_t = 0.25)]
    pub shear_step: f64,
    /// Direction bins per chart axis over [-1, 1].
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    /// Nodes excluded at each face; defaults to a fifth of the grid size.
    #[arg(long)]
    pub border: Option<usize>,
    /// CSV file receiving the flag volume as `row,col,bin` lines.
    #[arg(long)]
    pub flags: Option<PathBuf>,
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| commands::dispatch(&cli)) {
        Ok(report) => match report.emit(&cli, out, err) {
            Ok(()) => report.exit_code(),
            Err(e) => {
                let _ = writeln!(err, "error: {e:#}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<CliError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
