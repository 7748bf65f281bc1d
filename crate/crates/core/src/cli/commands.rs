use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ModelSection, RunConfig};
use crate::bench::{
    bench_forward, bench_forward_parallel, bench_stft, synthetic_waveforms, BenchResult,
};
use crate::datagen::{mix_entry, synth_corpus, CorpusManifest, ManifestEntry, Split};
use crate::dsp::analyze;
use crate::enhance::enhance;
use crate::error::{Error, Result};
use crate::metrics::{scores_to_tsv, sdr, stoi, summary_to_tsv, ScoreRow};
use crate::nn::{load_model, save_model, Normalization, Preset, TdnnModel};
use crate::trainer::{run_schedule, TrainReport};
use crate::wav::{read_wav, write_wav};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub manifest: PathBuf,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Writes a synthetic corpus to `<out_dir>/corpus`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary> {
    let dir = cfg.out_dir.join("corpus");
    create_dir(&dir)?;
    let (manifest_path, manifest) = synth_corpus(&cfg.corpus_spec(), &dir)?;
    Ok(SynthSummary {
        manifest: manifest_path,
        train: manifest.split(Split::Train).count(),
        valid: manifest.split(Split::Valid).count(),
        test: manifest.split(Split::Test).count(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub model: PathBuf,
    pub report_path: PathBuf,
    pub report: TrainReport,
}

/// Trains on the configured manifest and writes `model.tdnn` and
/// `train_report.tsv` to the output directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let manifest = CorpusManifest::load(cfg.manifest_path())?;
    create_dir(&cfg.out_dir)?;
    let options = cfg.train_options();
    if let Some(dir) = &options.checkpoint_dir {
        create_dir(dir)?;
    }
    let (model, report) = run_schedule(
        &cfg.train.plan,
        &manifest,
        &cfg.model.model_config()?,
        options,
    )?;
    let model_path = cfg.out_dir.join("model.tdnn");
    save_model(&model, &model_path)?;
    let report_path = cfg.out_dir.join("train_report.tsv");
    write_text(&report_path, &report.to_tsv())?;
    Ok(TrainSummary {
        model: model_path,
        report_path,
        report,
    })
}

/// Enhances one WAV file.
pub fn cmd_enhance(model_path: &Path, input: &Path, output: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let noisy = read_wav(input)?;
    write_wav(output, &enhance(&model, &noisy)?)
}

/// What to score against the clean reference.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalSource {
    /// Output of a trained model.
    Model(PathBuf),
    /// The unprocessed mixture.
    Noisy,
    /// The clean reference itself.
    Clean,
}

impl EvalSource {
    fn label(&self) -> String {
        match self {
            EvalSource::Model(p) => p
                .file_stem()
                .map_or("model".into(), |s| s.to_string_lossy().into_owned()),
            EvalSource::Noisy => "noisy".into(),
            EvalSource::Clean => "clean".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub scores_path: PathBuf,
    pub summary_path: PathBuf,
    pub rows: Vec<ScoreRow>,
}

fn score_entry(
    manifest: &CorpusManifest,
    entry: &ManifestEntry,
    source: &EvalSource,
    model: Option<&TdnnModel>,
    seed: u64,
) -> Result<ScoreRow> {
    let clean = read_wav(manifest.resolve(&entry.clean))?;
    let noisy = match &entry.noise {
        Some(n) => mix_entry(entry, &clean, &read_wav(manifest.resolve(n))?, seed)?.noisy,
        None => clean.clone(),
    };
    let estimate = match (source, model) {
        (EvalSource::Model(_), Some(m)) => enhance(m, &noisy)?,
        (EvalSource::Clean, _) => clean.clone(),
        _ => noisy,
    };
    Ok(ScoreRow {
        id: entry.id.clone(),
        snr_db: entry.snr_db,
        condition: entry.condition,
        stoi: stoi(&clean, &estimate)?,
        sdr: sdr(&clean, &estimate)?,
    })
}

/// Scores every entry of `split` and writes per-utterance and aggregate
/// tables named after the split and source.
pub fn cmd_evaluate(cfg: &RunConfig, source: &EvalSource, split: Split) -> Result<EvalSummary> {
    let manifest = CorpusManifest::load(cfg.manifest_path())?;
    let entries: Vec<&ManifestEntry> = manifest.split(split).collect();
    if entries.is_empty() {
        return Err(Error::invalid(format!("manifest has no {split} entries")));
    }
    let model = match source {
        EvalSource::Model(p) => Some(load_model(p)?),
        _ => None,
    };
    let rows = entries
        .par_iter()
        .map(|e| score_entry(&manifest, e, source, model.as_ref(), cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&cfg.out_dir)?;
    let stem = format!("{split}_{}", source.label());
    let scores_path = cfg.out_dir.join(format!("scores_{stem}.tsv"));
    let summary_path = cfg.out_dir.join(format!("summary_{stem}.tsv"));
    write_text(&scores_path, &scores_to_tsv(&rows))?;
    write_text(&summary_path, &summary_to_tsv(&rows)?)?;
    Ok(EvalSummary {
        scores_path,
        summary_path,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchTarget {
    File(PathBuf),
    /// Freshly initialized model with the configured widths.
    Preset(Preset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub results: Vec<BenchResult>,
    /// Mean STFT time per utterance, not part of the forward timings.
    pub stft_ms: f64,
}

impl BenchSummary {
    /// Table with each row's mean time relative to the first row.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("config\tutterances\tframes\tmean_ms\tstd_ms\tframes_per_s\tratio\n");
        let base = self.results.first().map_or(1.0, |r| r.mean_ms);
        for r in &self.results {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.1}\t{:.3}\n",
                r.config,
                r.utterance_count,
                r.frames_per_utterance,
                r.mean_ms,
                r.std_ms,
                r.frames_per_second,
                r.mean_ms / base
            ));
        }
        out.push_str(&format!("# stft_ms_per_utterance\t{:.4}\n", self.stft_ms));
        out
    }
}

/// Times every target on one shared synthetic input set.
pub fn cmd_bench(cfg: &RunConfig, targets: &[BenchTarget]) -> Result<BenchSummary> {
    if targets.is_empty() {
        return Err(Error::invalid("no models to benchmark"));
    }
    let models = targets
        .iter()
        .map(|t| match t {
            BenchTarget::File(p) => Ok((p.display().to_string(), load_model(p)?)),
            BenchTarget::Preset(p) => {
                let section = ModelSection {
                    preset: *p,
                    contexts: None,
                    widths: cfg.model.widths.clone(),
                };
                let model = TdnnModel::init(
                    &section.model_config()?,
                    Normalization::identity(crate::dsp::NUM_BINS),
                    cfg.seed,
                )?;
                Ok((p.name().to_string(), model))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let waves = synthetic_waveforms(cfg.bench.utterances, cfg.bench.frames, cfg.seed)?;
    let inputs = waves
        .iter()
        .map(|w| analyze(w).map(|(m, _)| m))
        .collect::<Result<Vec<_>>>()?;
    let b = &cfg.bench;
    let results = models
        .iter()
        .map(|(name, model)| {
            if b.parallel {
                bench_forward_parallel(name, model, &inputs, b.warmup, b.reps)
            } else {
                bench_forward(name, model, &inputs, b.warmup, b.reps)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchSummary {
        results,
        stft_ms: bench_stft(&waves, 1)?,
    })
}
