//! `whopt`: analysis of weakly homogeneous optimization problems from the
//! command line. Every subcommand writes a JSON report and prints a
//! one-line verdict.
//!
//! Exit codes: 0 completed, 2 validation failure, 3 bad input.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Failure;

#[derive(Debug, Parser)]
#[command(name = "whopt", version, about = "Existence, kernel and stability analysis for weakly homogeneous optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for all sampling; defaults to the problem file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Rays per quarter turn when sampling cones.
    #[arg(long, global = true, default_value_t = whopt::kernel::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Witness margin.
    #[arg(long, global = true, default_value_t = whopt::kernel::DEFAULT_DELTA)]
    pub delta: f64,
    /// Radius of witness searches.
    #[arg(long, global = true, default_value_t = 1e3)]
    pub radius: f64,
    /// Initial truncation radius of the expanding solver.
    #[arg(long, global = true, default_value_t = 8.0)]
    pub k0: f64,
    #[arg(long, global = true, default_value_t = 12)]
    pub max_doublings: usize,
    #[arg(long, global = true, default_value_t = 5)]
    pub restarts: usize,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AsymptoticOverride {
    /// Replace the asymptotic function, e.g. 'x1*x2'.
    #[arg(long)]
    pub h: Option<String>,
    /// Degree of the replacement, e.g. 2 or 5/2.
    #[arg(long)]
    pub alpha_override: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check homogeneity, the little-o condition, the asymptotic cone and convexity.
    Validate {
        problem: PathBuf,
        #[command(flatten)]
        asymptotic: AsymptoticOverride,
    },
    /// Classify the zero set of the asymptotic function on the asymptotic cone.
    Kernel {
        problem: PathBuf,
        #[command(flatten)]
        asymptotic: AsymptoticOverride,
    },
    /// Existence certificates for the unshifted problem.
    Certify { problem: PathBuf },
    /// Expanding-truncation solve of f(x) - <u, x>.
    Solve {
        problem: PathBuf,
        /// Linear shift, comma separated (use --u=-1,0 for negative entries).
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
    },
    /// Sweep both parametric routes and the solver over a grid of shifts.
    Parametric {
        problem: PathBuf,
        /// Axis values separated by ';', entries by ',', e.g. "-1,0,1;-1,0".
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Also write a CSV matrix for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Include wall-clock runtimes (reports are then run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Local boundedness and closed-graph probes of the solution map.
    ProbeUsc {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(j) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot configure {j} workers: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(&cli) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
