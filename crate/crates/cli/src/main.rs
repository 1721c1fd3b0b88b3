use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use rcv_cli::commands::{cmd_generate, cmd_rcv, cmd_sweep};
use rcv_cli::config::{resolve_seed, ConfigFile};
use rcv_cli::CliError;

/// Reconstructive cross-validation for time-series: generate
/// Ornstein-Uhlenbeck data, evaluate a run, or trace learning curves.
#[derive(Parser)]
#[command(name = "rcv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an OU training series plus out-of-sample continuation
    Generate(GenerateArgs),
    /// Run one rCV evaluation on a train/oos pair
    Rcv(RcvArgs),
    /// Trace learning curves over a range of fold counts
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Random seed (fallbacks: config file `seed`, then RCV_SEED env var)
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for emitted files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Cap on worker threads (default: available cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel length scale in exp(-d / length_scale)
    #[arg(long)]
    length_scale: Option<f64>,
    /// Ridge regularisation added to the training kernel diagonal
    #[arg(long)]
    ridge: Option<f64>,
    /// Diagonal jitter for factorization
    #[arg(long)]
    jitter: Option<f64>,
    /// Subtract the training mean before solving and add it back after
    #[arg(long)]
    center_mean: bool,
}

impl KernelArgs {
    fn apply(&self, config: &mut ConfigFile) {
        if let Some(v) = self.length_scale {
            config.kernel.length_scale = v;
        }
        if let Some(v) = self.ridge {
            config.kernel.ridge = v;
        }
        if let Some(v) = self.jitter {
            config.kernel.jitter = v;
        }
        if self.center_mean {
            config.kernel.center_mean = true;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training series length
    #[arg(long)]
    n_train: Option<usize>,
    /// Out-of-sample continuation length (0 for none)
    #[arg(long)]
    n_oos: Option<usize>,
    /// Regular grid spacing
    #[arg(long)]
    dt: Option<f64>,
    /// Mean level of the process
    #[arg(long)]
    mu: Option<f64>,
    /// Kernel length scale
    #[arg(long)]
    length_scale: Option<f64>,
    /// Diagonal jitter for the covariance factorization
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Args)]
struct RcvArgs {
    /// Training series CSV (t,y)
    train: PathBuf,
    /// Out-of-sample series CSV (t,y); may contain only the header
    oos: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Number of folds
    #[arg(long)]
    k: Option<usize>,
    /// Prediction-error form: mape or signed
    #[arg(long)]
    gp_form: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Training series CSV (t,y)
    train: PathBuf,
    /// Out-of-sample series CSV (t,y)
    oos: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Explicit fold counts, comma separated (e.g. 2,5,10)
    #[arg(long, value_delimiter = ',', conflicts_with = "k_range")]
    k: Option<Vec<usize>>,
    /// Inclusive fold-count range A..B (e.g. 2..20)
    #[arg(long)]
    k_range: Option<String>,
    /// rCV runs per fold count
    #[arg(long)]
    replicates: Option<usize>,
    /// Prediction-error form: mape or signed
    #[arg(long)]
    gp_form: Option<String>,
}

fn parse_gp_form(text: &str) -> Result<rcv_core::engine::GpForm, CliError> {
    text.parse().map_err(CliError::Validation)
}

fn parse_k_range(text: &str) -> Result<Vec<usize>, CliError> {
    let (lo, hi) = text.split_once("..").ok_or_else(|| {
        CliError::Validation(format!("--k-range expects A..B (inclusive), got '{text}'"))
    })?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|e| CliError::Validation(format!("--k-range start '{lo}': {e}")))?;
    let hi: usize = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|e| CliError::Validation(format!("--k-range end '{hi}': {e}")))?;
    if lo > hi {
        return Err(CliError::Validation(format!(
            "--k-range start {lo} exceeds end {hi}"
        )));
    }
    Ok((lo..=hi).collect())
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Validation("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return Ok(());
        }
        Err(err) => {
            // clap's rendered message already carries its own prefix
            eprint!("{err}");
            std::process::exit(1);
        }
    };

    match cli.command {
        Command::Generate(args) => {
            setup_threads(args.common.threads)?;
            let mut config = load_config(&args.common)?;
            if let Some(v) = args.n_train {
                config.ou.n_train = v;
            }
            if let Some(v) = args.n_oos {
                config.ou.n_oos = v;
            }
            if let Some(v) = args.dt {
                config.ou.dt = v;
            }
            if let Some(v) = args.mu {
                config.ou.mu = v;
            }
            if let Some(v) = args.length_scale {
                config.kernel.length_scale = v;
            }
            if let Some(v) = args.jitter {
                config.kernel.jitter = v;
            }
            let seed = resolve_seed(args.common.seed, config.seed)?;
            cmd_generate(&config, seed, &args.common.out_dir)
        }
        Command::Rcv(args) => {
            setup_threads(args.common.threads)?;
            let mut config = load_config(&args.common)?;
            args.kernel.apply(&mut config);
            if let Some(v) = args.k {
                config.rcv.k = v;
            }
            if let Some(text) = &args.gp_form {
                config.rcv.gp_form = parse_gp_form(text)?;
            }
            let seed = resolve_seed(args.common.seed, config.seed)?;
            cmd_rcv(&args.train, &args.oos, &config, seed, &args.common.out_dir)
        }
        Command::Sweep(args) => {
            setup_threads(args.common.threads)?;
            let mut config = load_config(&args.common)?;
            args.kernel.apply(&mut config);
            if let Some(values) = &args.k {
                config.sweep.k_values = values.clone();
            }
            if let Some(range) = &args.k_range {
                config.sweep.k_values = parse_k_range(range)?;
            }
            if let Some(v) = args.replicates {
                config.sweep.replicates = v;
            }
            if let Some(text) = &args.gp_form {
                config.rcv.gp_form = parse_gp_form(text)?;
            }
            let seed = resolve_seed(args.common.seed, config.seed)?;
            cmd_sweep(&args.train, &args.oos, &config, seed, &args.common.out_dir)
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
