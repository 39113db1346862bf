//! Command-line front end for `sympcap`.
//!
//! Results go to stdout (or `--out`) as JSON, or CSV for tabular output.
//! Failures print `{"error": {"kind": ..., "message": ...}}` on stdout and
//! exit with 2 for invalid input or 3 for numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod table;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sympcap::Error;

pub use commands::Rendered;

pub const THREADS_ENV: &str = "SYMPCAP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sympcap", version, about = "Symplectic capacities, nonsqueezing and EBK quantization")]
pub struct Cli {
    /// Reduced Planck constant.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub hbar: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override (symplectic checks, blob matching).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// One region, as `--ball R=1 N=3`, `--cylinder R=1 N=2 axis=1`,
/// `--ellipsoid omegas=1,3 E=1 [m=1]`, `--bottle R=1 r=0.5 [N=2]`, or `--region <json|@file>`.
#[derive(Debug, Args, Default)]
pub struct RegionArgs {
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub ball: Option<Vec<String>>,
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub cylinder: Option<Vec<String>>,
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub ellipsoid: Option<Vec<String>>,
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub bottle: Option<Vec<String>>,
    #[arg(long, value_name = "JSON")]
    pub region: Option<String>,
}

/// A quadratic Hamiltonian `z^T M z / 2`, as `--matrix <json|@file>` or `--oscillator omegas=1,3 [m=1]`.
#[derive(Debug, Args, Default)]
pub struct HamiltonianArgs {
    #[arg(long, value_name = "JSON")]
    pub matrix: Option<String>,
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub oscillator: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity of a ball, cylinder, ellipsoid or bottle.
    Capacity(RegionArgs),
    /// Symplectic spectrum and diagonalizing matrix of a quadratic Hamiltonian.
    Williamson(HamiltonianArgs),
    /// Exact shadows of a linearly transformed ball.
    Shadow {
        /// Symplectic matrix as `{"n": N, "matrix": [...]}`.
        #[arg(long, value_name = "JSON")]
        matrix: Option<String>,
        /// Random symplectic matrix, `N=2 [sigma=0.5]`.
        #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
        random: Option<Vec<String>>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Planes to report, e.g. `conjugate:1` or `q:1,2` (default: all).
        #[arg(long)]
        plane: Vec<String>,
    },
    /// Conjugate and nonconjugate shadow determinants over random symplectic matrices.
    NonsqueezeEnsemble {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
    },
    /// Shadows of a ball advected by a separable flow.
    Evolve {
        /// One component per degree of freedom, e.g. `--potential quartic harmonic omega=2`;
        /// every token without `=` starts a new component.
        #[arg(long, num_args = 1.., value_name = "KIND KEY=VALUE")]
        potential: Vec<String>,
        /// Repeat a single potential over this many degrees of freedom.
        #[arg(long)]
        dof: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value = "1,2,5")]
        times: String,
        #[arg(long, default_value_t = 0.01)]
        cell: f64,
        #[arg(long)]
        plane: Vec<String>,
        /// Write projected point clouds as CSV (time, plane, x, y).
        #[arg(long, value_name = "PATH")]
        dump_points: Option<PathBuf>,
    },
    /// EBK levels of a one-dimensional potential.
    #[command(name = "quantize-1d")]
    Quantize1d {
        #[arg(long, num_args = 1.., required = true, value_name = "KIND KEY=VALUE")]
        potential: Vec<String>,
        #[arg(long, default_value_t = 10)]
        nmax: u32,
    },
    /// Levels of a quadratic Hamiltonian from its symplectic spectrum.
    QuantizeQuadratic {
        #[command(flatten)]
        hamiltonian: HamiltonianArgs,
        /// One quantum number per degree of freedom, e.g. `2,0`.
        #[arg(long)]
        quanta: Option<String>,
        /// Every state with total quanta up to this.
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// EBK levels of a sum of one-dimensional potentials.
    QuantizeSeparable {
        /// Components as for `evolve`.
        #[arg(long, num_args = 1.., required = true, value_name = "KIND KEY=VALUE")]
        potential: Vec<String>,
        #[arg(long)]
        quanta: Option<String>,
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// Density of states of a quadratic Hamiltonian.
    Dos {
        #[command(flatten)]
        hamiltonian: HamiltonianArgs,
        /// Comma-separated energies.
        #[arg(long)]
        energy: String,
        /// Relative step of the finite difference.
        #[arg(long, default_value_t = sympcap::ebk::DOS_STEP)]
        step: f64,
    },
    /// Whether a region (or a bare capacity) is a quantum blob `(n + 1/2) h`.
    BlobCheck {
        #[arg(long)]
        capacity: Option<f64>,
        #[command(flatten)]
        region: RegionArgs,
    },
    /// Bottle of capacity `pi R^2` whose neck loop has action `pi r^2`.
    BottleDemo {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        neck: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

/// Error object printed on failure.
pub fn error_json(e: &Error) -> serde_json::Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

fn execute(cli: &Cli) -> Result<String, Error> {
    if !(cli.hbar > 0.0) || !cli.hbar.is_finite() {
        return Err(Error::InvalidInput(format!("--hbar must be positive, got {}", cli.hbar)));
    }
    if let Some(t) = cli.tol {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("--tol must be nonnegative, got {t}")));
        }
    }
    let pool = thread_pool()?;
    let rendered = pool.install(|| commands::dispatch(cli))?;
    Ok(match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rendered.json).expect("results serialize");
            s.push('\n');
            s
        }
        Format::Csv => rendered.table.to_csv(),
    })
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = execute(&cli).and_then(|text| match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::InvalidInput(format!("cannot write to stdout: {e}")))
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            println!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
