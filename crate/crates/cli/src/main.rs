use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dialect_id::eval::Family;
use dialect_id_cli::{cmd_features, cmd_paramcheck, cmd_run, cmd_synth, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dialect-id", version, about = "Cross-dialect speaker identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic corpus and print its manifest path.
    Synth {
        /// Voice spec (TOML); the built-in 13-speaker reference when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract features for every clip of a manifest into a cache.
    Features {
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        /// Seed of the token codebook.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the cross-dialect experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of mnb,svm,knn,rf,cnn.
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<Family>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print CNN layer shapes and parameter counts.
    Paramcheck {
        /// Output classes; the total is only checked when this is omitted.
        #[arg(long)]
        classes: Option<usize>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Synth { config, seed, out } => cmd_synth(config.as_deref(), seed, &out, &mut stdout).map(drop),
        Command::Features { manifest, cache, seed } => cmd_features(&manifest, &cache, seed, &mut stdout).map(drop),
        Command::Run {
            config,
            families,
            out,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(CliError::Usage)?;
            if let Some(f) = families {
                cfg.families = f;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_run(&cfg, &mut stdout).map(drop)
        }
        Command::Paramcheck { classes } => cmd_paramcheck(classes, &mut stdout).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
