//! The `ratnmt` command line: one subcommand per pipeline stage.

mod config;
mod stages;
mod stamp;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{error::ErrorKind, Parser, Subcommand};
use ratnmt_core::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "ratnmt", version, about = "Relevance-aware query translation pipeline")]
struct Cli {
    /// Flat `key = value` configuration file; later files win.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory for stage outputs; overrides `workdir`.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun the stage even if its outputs are up to date.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic lexicon corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize the raw corpora into the working directory.
    Prep,
    /// Retrieval index over the prepared documents.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Augment the translation corpus with retrieved context.
    Ratgen,
    /// Train the translation model.
    Train {
        #[command(subcommand)]
        phase: TrainPhase,
    },
    /// Translate topics with a trained checkpoint.
    Translate {
        /// [default: WORKDIR/multitask.ckpt]
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// [default: the `topics` key]
        #[arg(long)]
        topics: Option<PathBuf>,
        /// [default: WORKDIR/translations.jsonl]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank documents for translated queries.
    Retrieve {
        /// [default: WORKDIR/translations.jsonl]
        #[arg(long)]
        translations: Option<PathBuf>,
        /// [default: WORKDIR/run.txt]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run against relevance judgments.
    Eval {
        /// TREC run file [default: WORKDIR/run.txt]
        #[arg(long)]
        run: Option<PathBuf>,
        /// [default: the `qrels` key]
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Also report balance and precision/recall of these translations.
        #[arg(long)]
        translations: Option<PathBuf>,
        /// Target vocabulary with corpus counts, used for balance [default: WORKDIR/vocab.tgt.tsv]
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Where summary.csv and per_query.csv go [default: WORKDIR]
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IndexAction {
    /// Build the inverted index over the prepared documents.
    Build,
}

#[derive(Subcommand)]
enum TrainPhase {
    /// Translation-only training from a fresh model.
    Baseline,
    /// Joint translation and embedding training from a baseline checkpoint.
    Multitask {
        /// Starting checkpoint [default: WORKDIR/baseline.ckpt]
        #[arg(long)]
        from: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> ratnmt_core::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for path in &cli.config {
        cfg.apply_file(path)?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(w) = &cli.workdir {
        cfg.workdir = w.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> ratnmt_core::Result<()> {
    let cfg = load_config(cli)?;
    let force = cli.force;
    match &cli.command {
        Command::Synth { out } => stages::synth(&cfg, out, force),
        Command::Prep => stages::prep(&cfg, force),
        Command::Index {
            action: IndexAction::Build,
        } => stages::index_build(&cfg, force),
        Command::Ratgen => stages::ratgen(&cfg, force),
        Command::Train {
            phase: TrainPhase::Baseline,
        } => stages::train_base(&cfg, force),
        Command::Train {
            phase: TrainPhase::Multitask { from },
        } => stages::train_multi(&cfg, from.as_deref(), force),
        Command::Translate {
            checkpoint,
            topics,
            out,
        } => {
            let checkpoint = checkpoint.clone().unwrap_or_else(|| cfg.in_workdir("multitask.ckpt"));
            let topics = match topics {
                Some(t) => t.clone(),
                None => cfg.require("topics")?,
            };
            let out = out.clone().unwrap_or_else(|| cfg.in_workdir("translations.jsonl"));
            stages::translate_topics(&cfg, &checkpoint, &topics, &out, force)
        }
        Command::Retrieve { translations, out } => {
            let translations = translations
                .clone()
                .unwrap_or_else(|| cfg.in_workdir("translations.jsonl"));
            let out = out.clone().unwrap_or_else(|| cfg.in_workdir("run.txt"));
            stages::retrieve(&cfg, &translations, &out, force)
        }
        Command::Eval {
            run,
            qrels,
            translations,
            vocab,
            out_dir,
        } => {
            let run = run.clone().unwrap_or_else(|| cfg.in_workdir("run.txt"));
            let qrels = match qrels {
                Some(q) => q.clone(),
                None => cfg.require("qrels")?,
            };
            let vocab = vocab.clone().unwrap_or_else(|| cfg.in_workdir("vocab.tgt.tsv"));
            let out_dir = out_dir.clone().unwrap_or_else(|| cfg.workdir.clone());
            let inputs = stages::EvalInputs {
                run: &run,
                qrels: &qrels,
                translations: translations.as_deref(),
                vocab: &vocab,
                out_dir: &out_dir,
            };
            stages::eval(&cfg, &inputs, force)
        }
    }
}

/// 1 for configuration and usage problems, 2 for bad or missing data, 3 for
/// failures inside the numerical code.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Autodiff(_) => 3,
        Error::Io { .. } | Error::Parse { .. } | Error::DuplicateDocId(_) | Error::Unscoreable | Error::Data(_) => 2,
    }
}

/// Parses `args` (program name first) and runs one subcommand. Returns the
/// process exit code; diagnostics go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ratnmt: error: {e}");
            exit_code(&e)
        }
    }
}
