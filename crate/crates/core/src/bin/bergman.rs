use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use xq_bergman::config::RunConfig;
use xq_bergman::runner::{RunError, Runner};

#[derive(Parser)]
#[command(name = "bergman", version, about = "Bergman kernels and random zeros on singular plane curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// More log output (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Dimension table for every kind and rung.
    Dims,
    /// Kernel samples and Gram statistics.
    Kernel,
    /// Random zeros and divisor atoms.
    Zeros,
    /// Convergence series along the ladder.
    Converge,
    /// All of the above plus plots and a manifest.
    Report,
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        RunError::Config(xq_bergman::config::ConfigError::Invalid("--config PATH is required".into()))
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    let runner = Runner::new(cfg)?;
    match cli.command {
        Command::Dims => {
            println!("kind,p,measured,closed_form,exact_count");
            for r in runner.dims()? {
                println!("{},{},{},{},{}", r.kind, r.p, r.measured, r.closed_form, r.exact_count);
            }
        }
        Command::Kernel => {
            for r in runner.kernel()? {
                println!(
                    "{} p={} dim={} cond={:.3e} residual={:.2e}",
                    r.kind, r.p, r.dim, r.condition, r.residual
                );
            }
        }
        Command::Zeros => {
            for s in runner.zeros()? {
                println!(
                    "{} p={} samples={} mean atom at x1={:.4}",
                    s.kind, s.summary.level, s.summary.n_samples, s.summary.mean_atom_at_x1
                );
            }
        }
        Command::Converge => {
            let r = runner.converge()?;
            println!("{}", if r.pass { "PASS" } else { "FAIL" });
        }
        Command::Report => {
            let r = runner.report()?;
            println!("{}", if r["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" });
        }
    }
    println!("{}", runner.run_dir().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Ok(n) = std::env::var("BERGMAN_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("cannot size thread pool: {e}");
                }
            }
            _ => {
                let e = RunError::Config(xq_bergman::config::ConfigError::Invalid(format!(
                    "BERGMAN_THREADS={n:?} is not a positive integer"
                )));
                eprintln!("{}", e.to_json());
                return ExitCode::from(e.exit_code() as u8);
            }
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
