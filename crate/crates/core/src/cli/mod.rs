//! The `mlcl` command line: argument parsing, config files, output writing and run manifests.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};

pub use config::{config_path, merge_config, parse_config};
pub use manifest::{replay, sha256_hex, Manifest, OutputDigest, ReplayReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mlcl", version, about = "Mixed Littlewood computations with pseudo-absolute values")]
pub struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest working precision, in bits, before giving up as undecidable.
    #[arg(long = "precision-cap", global = true, default_value_t = 4096)]
    pub precision_cap: u32,
    /// Data output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; defaults to the `--out` extension, else csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel steps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a chain, evaluate valuations and check growth hypotheses.
    Psav(PsavArgs),
    /// Running minimum of the mixed term, or a bad-constant test.
    Traj(TrajArgs),
    /// Partial sums: asymp, dichotomy, ds, phi-bound, dhyp.
    Sums(SumsArgs),
    /// Chain construction from a valuation sequence and the gamma search.
    Construct(ConstructArgs),
    /// Smallest linear forms in logarithms at bounded height.
    Bwgap(BwgapArgs),
    /// Point sets on the circle: separated counts, dimension and entropy estimates.
    Orbit(OrbitArgs),
    /// Monte Carlo solution counts for random alpha.
    Mc(McArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PsavCheck {
    Growth,
    Ratios,
}

#[derive(Debug, Args)]
pub struct PsavArgs {
    #[arg(long = "D")]
    pub d: String,
    /// Number of terms to list.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Also report `|n|_D`.
    #[arg(long)]
    pub value: Option<String>,
    /// Also report `M(N)`.
    #[arg(long)]
    pub counting: Option<String>,
    #[arg(long, value_enum)]
    pub check: Option<PsavCheck>,
    #[arg(long, default_value = "1/2")]
    pub delta: String,
    #[arg(long = "kmax", default_value_t = 20)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct TrajArgs {
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long = "D", default_value = "trivial")]
    pub d: String,
    #[arg(long = "nmax")]
    pub n_max: u64,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long = "emit-every")]
    pub emit_every: Option<u64>,
    /// Run the bad-constant test `n ||n alpha|| <= c` instead of a scan.
    #[arg(long = "bad-c")]
    pub bad_c: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SumsCheck {
    Asymp,
    Dichotomy,
    Ds,
    PhiBound,
    Dhyp,
}

#[derive(Debug, Args)]
pub struct SumsArgs {
    #[arg(long, value_enum)]
    pub check: SumsCheck,
    #[arg(long = "D", default_value = "geometric:2")]
    pub d: String,
    /// Single `N`; overrides the grid.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Explicit comma-separated checkpoints.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long = "nmax", default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long = "per-decade", default_value_t = 1)]
    pub per_decade: u32,
    #[arg(long, default_value = "psi:c=1,p=1,m=1,l=1,e=1")]
    pub psi: String,
    #[arg(long = "d-min", default_value_t = 2)]
    pub d_min: u64,
    #[arg(long = "d-max", default_value_t = 64)]
    pub d_max: u64,
    #[arg(long, default_value_t = 1000)]
    pub n0: u64,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 2)]
    pub a: u64,
    #[arg(long = "D", default_value = "geometric:3")]
    pub d: String,
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    #[arg(long, default_value = "1/2")]
    pub delta: String,
    /// Also search for gamma with this alpha.
    #[arg(long)]
    pub alpha: Option<String>,
    /// `t1` for the gamma search; the construction's own `t_1` when absent.
    #[arg(long)]
    pub t1: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub budget: u32,
}

#[derive(Debug, Args)]
pub struct BwgapArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub primes: Vec<u64>,
    #[arg(long = "B")]
    pub b: u32,
    /// Largest number of enumerated vectors.
    #[arg(long, default_value_t = 100_000_000)]
    pub budget: u64,
    /// Report `1/(2 delta kappa)` for this delta.
    #[arg(long)]
    pub delta: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrbitMode {
    Points,
    Separated,
    Diffset,
    Dimension,
    Entropy,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[arg(long, value_enum)]
    pub mode: OrbitMode,
    /// `orbit`, `cantor:<depth>`, `grid:<base>:<depth>`, `random:<count>` or `list:<x1,x2,...>`.
    #[arg(long, default_value = "orbit")]
    pub set: String,
    #[arg(long, default_value = "golden")]
    pub alpha: String,
    #[arg(long, default_value_t = 2)]
    pub a: u64,
    #[arg(long = "D", default_value = "geometric:3")]
    pub d: String,
    #[arg(long = "L", default_value_t = 4)]
    pub l: u32,
    #[arg(long = "K", default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value = "1/1099511627776")]
    pub tol: String,
    #[arg(long, default_value = "1/100")]
    pub eps: String,
    /// Geometric grid `first:ratio:len` for dimension estimates.
    #[arg(long = "eps-grid", default_value = "1/9:1/3:7")]
    pub eps_grid: String,
    #[arg(long = "n-steps", default_value_t = 10)]
    pub n_steps: u32,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long = "D", default_value = "geometric:2")]
    pub d: String,
    #[arg(long, default_value = "psi:c=1,p=1,m=1,l=1,e=1")]
    pub psi: String,
    #[arg(long, default_value_t = 100)]
    pub samples: u64,
    #[arg(long = "nmax", default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// Where to write the JSON summary next to the CSV table.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match run(argv) {
        Ok(()) => 0,
        Err(RunError::Clap(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
        Err(RunError::App(e)) => {
            eprintln!("mlcl: {e}");
            e.exit_code()
        }
    }
}

enum RunError {
    Clap(clap::Error),
    App(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::App(e)
    }
}

fn run(argv: Vec<OsString>) -> std::result::Result<(), RunError> {
    let argv = match config_path(&argv) {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
            merge_config(&argv, &parse_config(&text)?)?
        }
        None => argv,
    };
    let cli = Cli::try_parse_from(&argv).map_err(RunError::Clap)?;
    execute(cli, &argv).map_err(RunError::App)
}

fn execute(cli: Cli, argv: &[OsString]) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        let report = replay(&r.manifest)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return if report.all_match {
            Ok(())
        } else {
            Err(Error::validation("replayed digests differ from the manifest"))
        };
    }
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    pool.install(|| manifest::run_with_manifest(&cli, argv))
}
