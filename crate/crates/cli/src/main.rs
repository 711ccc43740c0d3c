use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use logbal::pipeline::{
    evaluate_stage, features_stage, oversample_stage, prepare, run_all, synth, train_stage, OutputLayout,
    PipelineConfig, RunReport,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "logbal", version, about = "Imbalanced log anomaly detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Root seed; overrides the config's `seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Skip the SeqGAN oversampling stage.
    #[arg(long, global = true)]
    no_oversample: bool,

    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write a seeded synthetic corpus to the configured corpus path.
    Synth,
    /// Tokenize, build the vocabulary, encode and cache the corpus.
    Prepare,
    /// Grow the negatives with SeqGAN until the classes balance.
    Oversample,
    /// Train the autoencoder pair and write noisy features.
    Features,
    /// Split the features and cross-validate the GRU classifier.
    Train,
    /// Score the saved classifier on the held-out test set.
    Evaluate,
    /// Run every stage in order.
    RunAll,
}

/// Holds `<out>/.lock` for the life of the process.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(".lock");
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| format!("{} is in use by another run (remove {} if stale)", dir.display(), path.display()))?;
        Ok(DirLock(path))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn load_config(cli: &Cli, path: &Path) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::from_file(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.no_oversample {
        cfg.oversample = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &RunReport, out: &OutputLayout) {
    print!("{}", report.to_tsv());
    println!("stages: {}", report.stages.join(" -> "));
    println!("report: {}", out.report().display());
}

fn execute(cli: &Cli, cfg: &PipelineConfig) -> anyhow::Result<()> {
    let out = OutputLayout::new(&cli.out);
    let _lock = DirLock::acquire(&cli.out)?;
    match cli.command {
        Command::Synth => {
            let n = synth(cfg)?;
            println!("wrote {n} records to {}", cfg.corpus.display());
        }
        Command::Prepare => {
            let s = prepare(cfg, &out)?;
            println!(
                "records {} (unique {}), vocabulary {}, positives {}, negatives {}",
                s.raw_records, s.unique_records, s.vocab_size, s.positives, s.negatives
            );
        }
        Command::Oversample => {
            if !cfg.oversample {
                bail!("oversampling is disabled for this run");
            }
            let s = oversample_stage(cfg, &out)?;
            println!(
                "negatives {} -> {} (target {}), {} drawn, {} accepted",
                s.negatives_before, s.negatives_after, s.target, s.drawn, s.accepted
            );
        }
        Command::Features => {
            let s = features_stage(cfg, &out)?;
            println!("{} feature records ({} before noise)", s.records, s.pre_noise_count);
        }
        Command::Train => {
            let s = train_stage(cfg, &out)?;
            println!(
                "pool {}, test {}, {} folds, final model trained for {} epochs",
                s.pool,
                s.test,
                s.folds.len(),
                s.final_epochs
            );
        }
        Command::Evaluate => print_report(&evaluate_stage(cfg, &out)?, &out),
        Command::RunAll => print_report(&run_all(cfg, &out)?, &out),
    }
    Ok(())
}

fn usage() -> clap::builder::StyledStr {
    <Cli as clap::CommandFactory>::command().render_usage()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage());
            }
            return ExitCode::from(1);
        }
    };
    let Some(path) = cli.config.clone() else {
        eprintln!("error: --config <PATH> is required\n");
        eprintln!("{}", usage());
        return ExitCode::from(1);
    };
    if !path.is_file() {
        eprintln!("error: config file {} does not exist\n", path.display());
        eprintln!("{}", usage());
        return ExitCode::from(1);
    }
    let result = load_config(&cli, &path).and_then(|cfg| execute(&cli, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
