use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rbm_anneal::bas::generate_bas;
use rbm_anneal_cli::config::PRESETS;
use rbm_anneal_cli::{exit_code, load_config, load_rbm, run_compare, run_eval, run_sample, run_train};

/// Train and evaluate RBMs on bars-and-stripes with classical Gibbs sampling
/// or an emulated annealer.
#[derive(Parser)]
#[command(name = "rbm-anneal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Preset name, config file, or any output file with a `# config` header.
    #[arg(long, default_value = "paper_classical")]
    config: String,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides one key, e.g. `--set run.epochs=50`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<rbm_anneal_cli::ExperimentConfig> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("run.seed={seed}"));
        }
        load_config(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the bars-and-stripes dataset, one image per line.
    Bas {
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
    /// Train and write history.csv, per_image.csv, final.rbm and checkpoints.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print each record to stderr as training runs.
        #[arg(long)]
        verbose: bool,
    },
    /// Exact and Monte Carlo metrics for a checkpoint.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emulated annealer samples for a checkpoint (method from the config).
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Emit an energy histogram with this many bins instead of samples.
        #[arg(long)]
        histogram: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary table over several history.csv files.
    Compare {
        #[arg(required = true)]
        histories: Vec<PathBuf>,
    },
    /// Print the resolved configuration file.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// List the shipped presets.
    Presets,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing `{}`", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ANNEAL_RBM_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("ANNEAL_RBM_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Bas { m } => emit(&generate_bas(m)?.to_lines(), None),
        Command::Train { config, out, verbose } => {
            let cfg = config.load()?;
            let outputs = run_train(&cfg, &out, |r| {
                if verbose {
                    eprintln!(
                        "epoch {:>5}  ll {}  recon {}",
                        r.epoch,
                        r.log_likelihood.map(|x| format!("{x:.4}")).unwrap_or("-".into()),
                        r.reconstruction.map(|x| format!("{x:.4}")).unwrap_or("-".into())
                    );
                }
            })?;
            eprintln!("wrote {}", outputs.history.display());
            Ok(())
        }
        Command::Eval { config, checkpoint, out } => {
            let cfg = config.load()?;
            emit(&run_eval(&cfg, &load_rbm(&checkpoint)?)?, out.as_deref())
        }
        Command::Sample { config, checkpoint, histogram, out } => {
            let cfg = config.load()?;
            emit(&run_sample(&cfg, &load_rbm(&checkpoint)?, histogram)?, out.as_deref())
        }
        Command::Compare { histories } => emit(&run_compare(&histories)?, None),
        Command::Config { config } => emit(&config.load()?.to_file(), None),
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
