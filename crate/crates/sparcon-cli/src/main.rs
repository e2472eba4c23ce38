use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

mod config;
mod runner;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sparcon",
    about = "Sparsification-augmented contrastive anomaly detection on attributed networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory (also: SPARCON_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Inject benchmark anomalies and write the perturbed dataset.
    Inject(Common),
    /// Compute edge similarities and the sparsified view.
    Sparsify(Common),
    /// Train the contrastive model and write a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Override training epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score every node with a trained checkpoint.
    Score {
        #[command(flatten)]
        common: Common,
        /// Override inference rounds.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Evaluate a score table against its labels.
    Eval(Common),
    /// Full run: sparsify, train, score, fuse, evaluate.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Neighbor-similarity histogram split by anomaly class.
    Homophily(Common),
    /// Generate a deterministic benchmark dataset.
    Generate {
        /// Preset: "citation-scale" (2708 nodes), "small" (500) or "toy" (50).
        #[arg(long, default_value = "small")]
        preset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory for the generated edges/attrs files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    } else if let Ok(env_out) = std::env::var("SPARCON_OUT_DIR") {
        cfg.output_dir = PathBuf::from(env_out);
    }
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output dir {}", cfg.output_dir.display()))?;
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inject(common) => resolve(&common).and_then(runner::cmd_inject),
        Command::Sparsify(common) => resolve(&common).and_then(runner::cmd_sparsify),
        Command::Train { common, epochs } => resolve(&common).and_then(|mut cfg| {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            runner::cmd_train(cfg)
        }),
        Command::Score { common, rounds } => resolve(&common).and_then(|mut cfg| {
            if let Some(r) = rounds {
                cfg.train.rounds = r;
            }
            runner::cmd_score(cfg)
        }),
        Command::Eval(common) => resolve(&common).and_then(runner::cmd_eval),
        Command::Pipeline {
            common,
            epochs,
            rounds,
        } => resolve(&common).and_then(|mut cfg| {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(r) = rounds {
                cfg.train.rounds = r;
            }
            runner::cmd_pipeline(cfg)
        }),
        Command::Homophily(common) => resolve(&common).and_then(runner::cmd_homophily),
        Command::Generate { preset, seed, out } => runner::cmd_generate(&preset, seed, &out),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
