use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mflab_cli::commands::{cmd_expansion, cmd_rdm, cmd_selftest, cmd_sweep};
use mflab_cli::{CliError, CliResult, RunConfig};

/// Mean-field convergence laboratory for bosonic systems.
#[derive(Debug, Parser)]
#[command(name = "mflab", version)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, env = "MFLAB_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for randomized self-tests and observables.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep (n, p, t), write the rate and slope CSVs.
    Sweep,
    /// Print the reduced density matrix, its limit and their distance.
    Rdm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// Run the randomized identity checks.
    Selftest,
    /// Truncated series against exact propagation.
    Expansion {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// Highest order kept; the configured value when omitted.
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
    },
    /// Print the fully resolved configuration.
    Config,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    Ok(match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    match &cli.command {
        Command::Selftest => {
            if !cmd_selftest(cli.seed, &mut w)? {
                return Err(CliError::Numeric("self-test failures".into()));
            }
        }
        Command::Config => {
            let cfg = load(&cli)?;
            cfg.resolve()?;
            writeln!(w, "{}", cfg.dump())?;
        }
        Command::Sweep => {
            let cfg = load(&cli)?;
            let resolved = cfg.resolve()?;
            let rates = cli.out.join(&cfg.output.rates);
            let slopes = cli.out.join(&cfg.output.slopes);
            cmd_sweep(&resolved, &rates, &slopes, &mut w)?;
        }
        Command::Rdm { n, p, t } => {
            let resolved = load(&cli)?.resolve()?;
            cmd_rdm(&resolved, *n, *p, *t, &mut w)?;
        }
        Command::Expansion { t, kmax, n, p } => {
            let resolved = load(&cli)?.resolve()?;
            if !cmd_expansion(&resolved, *n, *p, *t, *kmax, cli.seed, &mut w)? {
                return Err(CliError::Numeric(
                    "series residual exceeds its bound".into(),
                ));
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mflab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
