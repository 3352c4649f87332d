use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use timbre_cli::report::{domains_label, percent};
use timbre_cli::{cmd_ablate, cmd_evaluate, cmd_extract, cmd_train, CliError, CliResult, EvalSubset, RunConfig};

/// Musical instrument timbre classification: feature extraction, boosted
/// tree training, evaluation and feature-combination ablation.
#[derive(Parser, Debug)]
#[command(name = "timbre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract one fused feature row per manifest clip.
    Extract {
        #[arg(long, env = "TIMBRE_MANIFEST")]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Feature file to write.
        #[arg(long, env = "TIMBRE_OUT")]
        out: PathBuf,
    },
    /// Split, scale, train and save a model with its scaler and split record.
    Train {
        #[arg(long, env = "TIMBRE_FEATURES")]
        features: PathBuf,
        #[arg(long, env = "TIMBRE_MODEL")]
        model: PathBuf,
        /// Needed only when the config sets `split = "subset"`.
        #[arg(long, env = "TIMBRE_MANIFEST")]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Confusion matrix and accuracy of a saved model.
    Evaluate {
        #[arg(long, env = "TIMBRE_MODEL")]
        model: PathBuf,
        #[arg(long, env = "TIMBRE_FEATURES")]
        features: PathBuf,
        /// Confusion-matrix report to write.
        #[arg(long, env = "TIMBRE_OUT")]
        out: PathBuf,
        #[arg(long, env = "TIMBRE_SUBSET", value_enum, default_value = "test")]
        subset: SubsetArg,
        #[arg(long, env = "TIMBRE_WORKERS")]
        workers: Option<usize>,
    },
    /// Run the eight feature combinations on one split.
    Ablate {
        #[arg(long, env = "TIMBRE_MANIFEST")]
        manifest: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        common: Common,
        /// Ablation table to write.
        #[arg(long, env = "TIMBRE_OUT")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML file with feature and training keys.
    #[arg(long, env = "TIMBRE_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "TIMBRE_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, env = "TIMBRE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "TIMBRE_SPLIT_RATIO", default_value_t = 0.7)]
    split_ratio: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SubsetArg {
    Test,
    All,
}

fn pool(workers: Option<usize>) -> CliResult<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Extract { manifest, common, out } => {
            let config = RunConfig::load(common.config.as_deref())?;
            let summary = cmd_extract(&manifest, &config, &out, common.workers)?;
            println!("wrote {} feature rows to {}", summary.rows, out.display());
            if let Some(report) = summary.failure_report {
                for f in &summary.failures {
                    eprintln!("failed: {} ({}): {}", f.uuid, f.path.display(), f.reason);
                }
                return Err(CliError::PartialExtraction {
                    failed: summary.failures.len(),
                    total: summary.rows + summary.failures.len(),
                    report,
                });
            }
        }
        Command::Train {
            features,
            model,
            manifest,
            split,
            common,
        } => {
            pool(common.workers)?;
            let config = RunConfig::load(common.config.as_deref())?;
            let s = cmd_train(&features, &config, split.seed, split.split_ratio, &model, manifest.as_deref())?;
            for (k, v) in &s.hyperparameters {
                println!("{k} = {v}");
            }
            println!("train rows {}, test rows {}", s.n_train, s.n_test);
            println!("train accuracy: {}", percent(s.train_accuracy));
            println!("test accuracy: {}", percent(s.test_accuracy));
        }
        Command::Evaluate {
            model,
            features,
            out,
            subset,
            workers,
        } => {
            pool(workers)?;
            let subset = match subset {
                SubsetArg::Test => EvalSubset::Test,
                SubsetArg::All => EvalSubset::All,
            };
            let s = cmd_evaluate(&model, &features, subset, &out)?;
            println!("accuracy: {} over {} clips", percent(s.accuracy), s.confusion.total());
            let m = &s.confusion;
            for (i, name) in m.class_names().iter().enumerate() {
                let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), percent);
                println!("  {name}: precision {}, recall {}", fmt(m.precision(i)), fmt(m.recall(i)));
            }
        }
        Command::Ablate {
            manifest,
            split,
            common,
            out,
        } => {
            let config = RunConfig::load(common.config.as_deref())?;
            let s = cmd_ablate(&manifest, &config, split.seed, split.split_ratio, common.workers, &out)?;
            println!("split seed {}", s.split_seed);
            for r in &s.rows {
                let acc = match &r.accuracy {
                    Ok(a) => percent(*a),
                    Err(e) => format!("failed ({e})"),
                };
                println!("{} {:>3}  {:<40} {acc}", r.combo_id, r.dimension, domains_label(&r.domains));
            }
            if !s.failures.is_empty() {
                eprintln!("{} clips failed to extract and were skipped", s.failures.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
