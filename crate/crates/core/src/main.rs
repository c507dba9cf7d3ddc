use clap::{Parser, Subcommand};
use phototherm::experiments::{self, compare_reconstructions, load_reconstruction, ExperimentConfig};
use phototherm::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phototherm", version, about = "Photothermal resolution-limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent realizations and detectors.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare two reconstructions written by the phantom pipeline.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Print the experiment ids.
    List,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, jobs: usize) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::from_path(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `out`".into()))?;
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let manifest = pool.install(|| experiments::run_experiment(&cfg, &out))?;
    println!(
        "{}: wrote {} files to {}",
        manifest.experiment,
        manifest.files.len() + 1,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, jobs } => run(config, out, seed, jobs),
        Command::Compare { a, b } => (|| {
            let report = compare_reconstructions(&load_reconstruction(&a)?, &load_reconstruction(&b)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        })(),
        Command::List => {
            experiments::EXPERIMENT_IDS.iter().for_each(|id| println!("{id}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
