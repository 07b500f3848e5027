//! Command-line front end.
//!
//! Conventions shared by every subcommand:
//!
//! - structured output goes to stdout; diagnostics and timing go to stderr
//!   (`elapsed_ms=<n>` on success);
//! - identical invocations produce byte-identical stdout, independent of
//!   `--workers`;
//! - exit code 0 on success, 2 on any input or usage error, 3 when the
//!   work-estimate bound or the available precision is exceeded;
//! - `--json` emits a JSON document with deterministic key order;
//!   `--csv` is accepted by `count` only;
//! - the work-estimate bound can be raised or lowered via the
//!   `WITTGRASS_WORKBOUND` environment variable.

mod commands;
mod fileio;

use clap::{Parser, Subcommand};
use commands::{CliError, Mode};
use std::io::Write as _;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "wittgrass",
    version,
    about = "Exact arithmetic for truncated Witt vectors: ring laws, lattice \
             strata, chain counts, determinant lines, and tame symbols",
    propagate_version = true
)]
struct Cli {
    /// Emit a JSON document instead of plain text
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV (accepted by `count` only)
    #[arg(long, global = true)]
    csv: bool,

    /// Worker threads for enumeration; 0 means one per CPU core
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Seed reserved for future sampling options; every current command is
    /// fully deterministic
    #[arg(long, global = true, default_value_t = 1729)]
    seed: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the universal addition and multiplication polynomials for
    /// length-m p-typical vectors
    WittLaws {
        /// Prime p
        #[arg(long)]
        p: u64,
        /// Number of components (polynomials S_0..S_{m-1}, P_0..P_{m-1})
        #[arg(long)]
        m: usize,
    },
    /// Decide whether one partition dominates another, by four independent
    /// characterizations
    Dominance {
        /// Left partition, comma-separated weakly decreasing parts (0 = empty)
        #[arg(long)]
        lhs: String,
        /// Right partition, same format
        #[arg(long)]
        rhs: String,
    },
    /// Smith normal form of a square matrix read from a file
    Snf {
        /// Matrix file
        #[arg(long)]
        matrix: String,
    },
    /// Graded determinant line of the torsion module presented by a matrix
    Det {
        /// Matrix file presenting the module as R^n / row span
        #[arg(long)]
        matrix: String,
        /// Optional chain file; default is the module's reference chain
        #[arg(long)]
        chain: Option<String>,
    },
    /// Count submodules of (O/p^c)^n by quotient type
    Count {
        /// Ambient rank n
        #[arg(long)]
        n: usize,
        /// Truncation depth c
        #[arg(long)]
        c: u32,
        /// Residue field size, a prime power
        #[arg(long)]
        q: u64,
        /// Restrict to one quotient type (comma-separated parts, 0 = empty)
        #[arg(long = "type")]
        r#type: Option<String>,
        /// With --type: count quotient types dominated by it instead
        #[arg(long)]
        leq: bool,
    },
    /// Count complete flag chains adapted to a type; optionally group chain
    /// endpoints by stratum with fiber sizes
    Demazure {
        /// Ambient rank n
        #[arg(long)]
        n: usize,
        /// Target type (comma-separated parts)
        #[arg(long = "type")]
        r#type: String,
        /// Residue field size, a prime power
        #[arg(long)]
        q: u64,
        /// Enumerate chains and report per-stratum point and fiber counts
        #[arg(long)]
        fibers: bool,
    },
    /// Tame symbol of two nonzero elements given as digit expressions
    Tame {
        /// Prime p
        #[arg(long)]
        p: u64,
        /// Residue field degree d (field size q = p^d)
        #[arg(long)]
        d: usize,
        /// First element, e.g. 2.0.1*p^-1
        #[arg(short, long)]
        a: String,
        /// Second element, same format
        #[arg(short, long)]
        b: String,
    },
    /// Central-extension cocycle of two determinant-one loop-group elements
    Cocycle {
        /// Prime p
        #[arg(long)]
        p: u64,
        /// Residue field degree d
        #[arg(long)]
        d: usize,
        /// Matrix rank n
        #[arg(long)]
        n: usize,
        /// File holding the first element
        #[arg(long)]
        g: String,
        /// File holding the second element
        #[arg(long)]
        h: String,
        /// Reference scale; default is the finest scale the second element
        /// preserves
        #[arg(long, allow_hyphen_values = true)]
        a: Option<i64>,
    },
}

fn run(cli: &Cli, mode: Mode) -> Result<String, CliError> {
    match &cli.cmd {
        Cmd::WittLaws { p, m } => commands::witt_laws_cmd(*p, *m, mode),
        Cmd::Dominance { lhs, rhs } => commands::dominance_cmd(lhs, rhs, mode),
        Cmd::Snf { matrix } => commands::snf_cmd(matrix, mode),
        Cmd::Det { matrix, chain } => commands::det_cmd(matrix, chain.as_deref(), mode),
        Cmd::Count {
            n,
            c,
            q,
            r#type,
            leq,
        } => commands::count_cmd(*n, *c, *q, r#type.as_deref(), *leq, mode),
        Cmd::Demazure {
            n,
            r#type,
            q,
            fibers,
        } => commands::demazure_cmd(*n, r#type, *q, *fibers, mode),
        Cmd::Tame { p, d, a, b } => commands::tame_cmd(*p, *d, a, b, mode),
        Cmd::Cocycle {
            p,
            d,
            n,
            g,
            h,
            a,
        } => commands::cocycle_cmd(*p, *d, *n, g, h, *a, mode),
    }
}

fn main() {
    let cli = Cli::parse();
    let mode = if cli.json {
        Mode::Json
    } else if cli.csv {
        Mode::Csv
    } else {
        Mode::Text
    };
    if mode == Mode::Csv && !matches!(cli.cmd, Cmd::Count { .. }) {
        eprintln!("error: --csv is accepted by `count` only");
        std::process::exit(2);
    }
    // `seed` is part of the stable interface; no current command samples.
    let _ = cli.seed;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .expect("the global thread pool is initialized exactly once");
    let t0 = Instant::now();
    match run(&cli, mode) {
        Ok(payload) => {
            print!("{payload}");
            let _ = std::io::stdout().flush();
            eprintln!("elapsed_ms={}", t0.elapsed().as_millis());
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Resource(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    }
}
