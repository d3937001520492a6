use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use tensorconc::experiments::Abscissa;
use tensorconc_cli::commands::{
    cmd_bound, cmd_fit, cmd_simulate, cmd_sweep, cmd_verify, SweepOptions, VerifyOptions, DEFAULT_C0,
};
use tensorconc_cli::{load_config, ConfigError};

/// Tensor concentration experiments: closed-form rates, Monte Carlo sweeps,
/// exponent fits and lemma checks.
#[derive(Parser)]
#[command(name = "tensorconc", version)]
struct Cli {
    /// Worker threads for trial execution (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "TENSORCONC_OUT", default_value = "tensorconc-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AbscissaArg {
    LogN,
    LogLogN,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form rate table for a `rates` config.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a plan in memory and print its summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the plan's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a plan into a resumable result store.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Continue an existing store.
        #[arg(long)]
        resume: bool,
        /// Stop after appending this many trials.
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Fit grid-point means of a store against log N or log log N.
    Fit {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        statistic: String,
        #[arg(long, value_enum)]
        abscissa: Option<AbscissaArg>,
    },
    /// Run the lemma property suites.
    Verify {
        /// Comma-separated absolute constants.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_C0.to_vec())]
        c0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut stdout = std::io::stdout().lock();
    let out = cli.out;
    match cli.command {
        Command::Bound { config } => {
            let cfg = load_config(&config)?;
            cmd_bound(cfg.rates().map_err(|e| ConfigError(e.to_string()))?, &out, &mut stdout)?;
            Ok(true)
        }
        Command::Simulate { config, seed } => {
            let cfg = load_config(&config)?;
            cmd_simulate(cfg.plan().map_err(|e| ConfigError(e.to_string()))?, seed, &out, &mut stdout)?;
            Ok(true)
        }
        Command::Sweep { config, resume, stop_after } => {
            let cfg = load_config(&config)?;
            let opts = SweepOptions { resume, stop_after, chunk: 0 };
            cmd_sweep(cfg.plan().map_err(|e| ConfigError(e.to_string()))?, &out, &opts, &mut stdout)?;
            Ok(true)
        }
        Command::Fit { store, statistic, abscissa } => {
            let abscissa = abscissa.map(|a| match a {
                AbscissaArg::LogN => Abscissa::LogN,
                AbscissaArg::LogLogN => Abscissa::LogLogN,
            });
            cmd_fit(&store, &statistic, abscissa, &mut stdout)?;
            Ok(true)
        }
        Command::Verify { c0, seed } => {
            let opts = VerifyOptions { c0, seed, ..VerifyOptions::default() };
            Ok(cmd_verify(&opts, &out, &mut stdout)?.1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.workers {
        pool = pool.num_threads(k.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
