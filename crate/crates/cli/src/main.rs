//! `sudlerlab`: compute Sudler products, the figure-eight knot invariant at
//! roots of unity, growth-constant estimates along convergents, and run the
//! verification suites from the command line.

mod commands;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use sudlerlab_core::Error;

#[derive(Debug, Parser)]
#[command(name = "sudlerlab", version, about = "Sudler products, J_{4_1,0}, and continued-fraction growth constants")]
pub struct Cli {
    /// Working precision in bits (env: SUDLERLAB_PRECISION_BITS; auto when unset).
    #[arg(long, global = true)]
    pub precision_bits: Option<u32>,

    /// Worker threads (env: SUDLERLAB_WORKERS; defaults to the machine).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Stream chunk size; fixed chunking makes output worker-independent.
    #[arg(long, global = true, default_value_t = 65_536)]
    pub chunk_size: u64,

    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,

    /// Emit CSV where the command supports it.
    #[arg(long, global = true)]
    pub csv: bool,

    /// Residual tolerance profile; `relaxed` multiplies tolerances by 1e3.
    #[arg(long, global = true, value_enum, default_value_t = ToleranceProfile::Strict)]
    pub tolerance_profile: ToleranceProfile,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToleranceProfile {
    Strict,
    Relaxed,
}

impl ToleranceProfile {
    pub fn scale(self) -> f64 {
        match self {
            ToleranceProfile::Strict => 1.0,
            ToleranceProfile::Relaxed => 1e3,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Continued-fraction table of a rational or quadratic irrational.
    Cf {
        /// `a/b` or `[a0; a1, ..., (b1, ..., bp)]`.
        alpha: String,
        #[arg(long, default_value_t = 12)]
        k_max: usize,
    },
    /// `J(e(a/b)) = sum_{N<b} P_N(a/b)^2`.
    Jones { rational: String },
    /// Prefix stream `log P_N` of a target.
    Sudler {
        target: String,
        #[arg(long)]
        n_max: u64,
        /// Emit every `stride`-th row.
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },
    /// Run a verification suite; exits nonzero on failure.
    Verify {
        /// One of: reflection, average, cotangent, transfer, factorization, bounds.
        suite: String,
        /// Number of random fractions (reflection/average).
        #[arg(long)]
        random: Option<u64>,
        /// Denominator cap for random/exhaustive corpora.
        #[arg(long)]
        bmax: Option<u64>,
        /// Sweep every reduced fraction up to `bmax`.
        #[arg(long)]
        exhaustive: bool,
        /// Quadratic irrational for cotangent/transfer/factorization/bounds.
        #[arg(long)]
        alpha: Option<String>,
        /// Depth for table-indexed suites.
        #[arg(long)]
        upto_k: Option<usize>,
        /// RNG seed for random corpora.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate growth constants over a window of convergents.
    EstimateK {
        alpha: String,
        /// Comma-separated exponents, e.g. `2,inf` or `0.5,1,2,5,inf`.
        #[arg(long, default_value = "2,inf")]
        c: String,
        /// Window `lo..hi` (inclusive).
        #[arg(long, default_value = "8..24")]
        k_window: String,
    },
    /// Sweep a limit function `G_r` over an interval (CSV `x,G,tail_bound`).
    Limitfn {
        alpha: String,
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// `lo..hi`; defaults to the interval `I_r`.
        #[arg(long)]
        x_range: Option<String>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        n_trunc: Option<u64>,
        /// Instead of sweeping `x`, report the convergence of the perturbed
        /// products toward `G_r` over this `m` range (CSV
        /// `m,q_k,sup_error,rate_envelope`).
        #[arg(long)]
        convergence: Option<String>,
    },
    /// Ostrowski digits of an integer with respect to a quadratic irrational.
    Ostrowski {
        alpha: String,
        n: String,
        #[arg(long, default_value_t = 40)]
        k_max: usize,
    },
    /// Hyperbolic volume of the figure-eight knot complement.
    Vol41,
    /// Differences of `log J` along the convergents of `[0; (a)]`.
    HSequence {
        alpha: String,
        #[arg(long, default_value_t = 20)]
        k_max: usize,
    },
}

pub struct RunConfig {
    pub precision_bits: Option<u32>,
    pub chunk_size: u64,
    pub json: bool,
    pub csv: bool,
    pub tolerance_scale: f64,
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        Error::Budget(_) | Error::PrecisionInsufficient { .. } => 3,
        _ => 4,
    }
}

fn main() {
    let cli = Cli::parse();

    let workers = cli
        .workers
        .or_else(|| env_parse("SUDLERLAB_WORKERS"))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .expect("thread pool is initialized once");

    let precision_bits = cli.precision_bits.or_else(|| env_parse("SUDLERLAB_PRECISION_BITS"));
    if let Some(p) = precision_bits {
        if p < 64 {
            eprintln!("error: precision must be at least 64 bits");
            std::process::exit(2);
        }
    }
    let cfg = RunConfig {
        precision_bits,
        chunk_size: cli.chunk_size.max(1),
        json: cli.json,
        csv: cli.csv,
        tolerance_scale: cli.tolerance_profile.scale(),
    };

    let result = match cli.cmd {
        Cmd::Cf { alpha, k_max } => commands::cmd_cf(&cfg, &alpha, k_max),
        Cmd::Jones { rational } => commands::cmd_jones(&cfg, &rational),
        Cmd::Sudler { target, n_max, stride } => commands::cmd_sudler(&cfg, &target, n_max, stride),
        Cmd::Verify { suite, random, bmax, exhaustive, alpha, upto_k, seed } => {
            verify::cmd_verify(&cfg, &suite, random, bmax, exhaustive, alpha.as_deref(), upto_k, seed)
        }
        Cmd::EstimateK { alpha, c, k_window } => commands::cmd_estimate(&cfg, &alpha, &c, &k_window),
        Cmd::Limitfn { alpha, r, x_range, points, n_trunc, convergence } => {
            commands::cmd_limitfn(&cfg, &alpha, r, x_range.as_deref(), points, n_trunc, convergence.as_deref())
        }
        Cmd::Ostrowski { alpha, n, k_max } => commands::cmd_ostrowski(&cfg, &alpha, &n, k_max),
        Cmd::Vol41 => commands::cmd_vol41(&cfg),
        Cmd::HSequence { alpha, k_max } => commands::cmd_h_sequence(&cfg, &alpha, k_max),
    };

    match result {
        Ok(true) => {}
        Ok(false) => std::process::exit(1), // suite reported failures
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
