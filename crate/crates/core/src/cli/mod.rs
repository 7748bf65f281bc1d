//! The `tdnn-enhance` command line: `synth`, `train`, `enhance`, `evaluate`
//! and `bench`, configured by a `section.key = value` file plus a few global
//! overrides.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data or I/O error,
//! 3 numeric failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{
    cmd_bench, cmd_enhance, cmd_evaluate, cmd_synth, cmd_train, BenchSummary, BenchTarget,
    EvalSource, EvalSummary, SynthSummary, TrainSummary,
};
pub use config::{BenchSection, DataSection, ModelSection, RunConfig, TrainSection};

use crate::datagen::Split;
use crate::error::{Error, Result};
use crate::metrics::summary_to_tsv;
use crate::nn::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "tdnn-enhance",
    version,
    about = "TDNN mask-based speech enhancement"
)]
pub struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `model.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `io.out_dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Noisy,
    Clean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Valid,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Valid => Split::Valid,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and its manifest under <out_dir>/corpus.
    Synth,
    /// Run the training schedule on the configured manifest.
    Train,
    /// Enhance one 8 kHz mono WAV file.
    Enhance {
        #[arg(long)]
        model: PathBuf,
        input: PathBuf,
        output: PathBuf,
    },
    /// Score a model, or an unprocessed baseline, on a manifest split.
    Evaluate {
        #[arg(
            long,
            conflicts_with = "baseline",
            required_unless_present = "baseline"
        )]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Time forward passes of model files and/or freshly initialized presets.
    Bench {
        models: Vec<PathBuf>,
        #[arg(long = "preset")]
        presets: Vec<String>,
        /// Also write the table here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Resolves the config file and global overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

/// Executes a parsed command line, returning the text to print.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = load_config(cli)?;
    Ok(match &cli.command {
        Command::Synth => {
            let s = cmd_synth(&cfg)?;
            format!(
                "manifest\t{}\ntrain\t{}\nvalid\t{}\ntest\t{}\n",
                s.manifest.display(),
                s.train,
                s.valid,
                s.test
            )
        }
        Command::Train => {
            let s = cmd_train(&cfg)?;
            let best = s.report.best_record();
            format!(
                "model\t{}\nreport\t{}\nbest\tstage {} epoch {} valid_loss {}\n",
                s.model.display(),
                s.report_path.display(),
                best.stage,
                best.epoch,
                best.valid_loss
            )
        }
        Command::Enhance {
            model,
            input,
            output,
        } => {
            cmd_enhance(model, input, output)?;
            format!("wrote\t{}\n", output.display())
        }
        Command::Evaluate {
            model,
            baseline,
            split,
        } => {
            let source = match (model, baseline) {
                (Some(m), _) => EvalSource::Model(m.clone()),
                (None, Some(Baseline::Clean)) => EvalSource::Clean,
                (None, _) => EvalSource::Noisy,
            };
            let s = cmd_evaluate(&cfg, &source, (*split).into())?;
            format!(
                "scores\t{}\nsummary\t{}\n{}",
                s.scores_path.display(),
                s.summary_path.display(),
                summary_to_tsv(&s.rows)?
            )
        }
        Command::Bench {
            models,
            presets,
            output,
        } => {
            let mut targets: Vec<BenchTarget> = presets
                .iter()
                .map(|p| p.parse::<Preset>().map(BenchTarget::Preset))
                .collect::<Result<_>>()?;
            targets.extend(models.iter().cloned().map(BenchTarget::File));
            let table = cmd_bench(&cfg, &targets)?.to_tsv();
            if let Some(path) = output {
                std::fs::write(path, &table).map_err(|e| Error::io(path, e))?;
            }
            table
        }
    })
}

/// Full entry point: parses `args`, runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // fails only if a pool already exists, e.g. when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
