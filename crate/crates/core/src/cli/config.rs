//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! model.preset = tdnn-f
//! model.width = 64
//! train.stages = noisy_clean:30,clean_clean:5,noise_silence:5,noisy_clean:5
//! data.train = 50
//! io.out_dir = runs/f64
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::datagen::{CorpusSpec, Expansion};
use crate::dsp::NUM_BINS;
use crate::error::{Error, Result};
use crate::nn::{AdamState, ContextSpec, ModelConfig, Preset};
use crate::trainer::{StagePlan, TrainOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub preset: Preset,
    /// Overrides the preset's contexts when set.
    pub contexts: Option<ContextSpec>,
    /// Per-hidden-layer widths; a single value applies to every layer.
    pub widths: Vec<usize>,
}

impl ModelSection {
    pub fn model_config(&self) -> Result<ModelConfig> {
        let contexts = self
            .contexts
            .clone()
            .unwrap_or_else(|| self.preset.contexts());
        let hidden = contexts.len() - 1;
        let hidden_widths = match self.widths.as_slice() {
            [w] => vec![*w; hidden],
            ws if ws.len() == hidden => ws.to_vec(),
            ws => {
                return Err(Error::invalid(format!(
                    "{} widths given for {hidden} hidden layers",
                    ws.len()
                )))
            }
        };
        let config = ModelConfig {
            input_dim: NUM_BINS,
            hidden_widths,
            output_dim: NUM_BINS,
            contexts,
        };
        config.validate()?;
        Ok(config)
    }

    /// Preset name, or `custom` for explicit contexts.
    pub fn label(&self) -> String {
        match &self.contexts {
            Some(_) => "custom".into(),
            None => self.preset.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub plan: StagePlan,
    pub learning_rate: f64,
    pub batch: usize,
    pub checkpoints: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub manifest: Option<PathBuf>,
    pub synth: CorpusSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSection {
    pub utterances: usize,
    pub frames: usize,
    pub warmup: usize,
    pub reps: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataSection,
    pub bench: BenchSection,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            model: ModelSection {
                preset: Preset::TdnnF,
                contexts: None,
                widths: vec![256],
            },
            train: TrainSection {
                plan: StagePlan::default(),
                learning_rate: AdamState::DEFAULT_LEARNING_RATE,
                batch: 1,
                checkpoints: false,
            },
            data: DataSection {
                manifest: None,
                synth: CorpusSpec::default(),
            },
            bench: BenchSection {
                utterances: 10,
                frames: 500,
                warmup: 1,
                reps: 5,
                parallel: false,
            },
            out_dir: PathBuf::from("out"),
        }
    }
}

fn value<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}`"))
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|s| value(s.trim())).collect()
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, v) = content
                .split_once('=')
                .ok_or_else(|| err("expected `section.key = value`".into()))?;
            let (key, v) = (key.trim(), v.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("`{key}` is set twice")));
            }
            cfg.set(key, v, base_dir).map_err(err)?;
        }
        cfg.model.model_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> std::result::Result<(), String> {
        let path = |v: &str| base.join(v);
        let synth = &mut self.data.synth;
        match key {
            "model.preset" => self.model.preset = v.parse().map_err(|e: Error| e.to_string())?,
            "model.contexts" => {
                self.model.contexts = Some(ContextSpec::parse(v).map_err(|e| e.to_string())?)
            }
            "model.width" | "model.widths" => {
                self.model.widths = list(v)?;
                if self.model.widths.contains(&0) {
                    return Err("widths must be positive".into());
                }
            }
            "model.seed" => self.seed = value(v)?,
            "train.stages" => self.train.plan = StagePlan::parse(v).map_err(|e| e.to_string())?,
            "train.learning_rate" => {
                self.train.learning_rate = value(v)?;
                if !(self.train.learning_rate >= 0.0 && self.train.learning_rate.is_finite()) {
                    return Err("learning rate must be finite and non-negative".into());
                }
            }
            "train.batch" => {
                self.train.batch = value(v)?;
                if self.train.batch == 0 {
                    return Err("batch must be at least 1".into());
                }
            }
            "train.checkpoints" => self.train.checkpoints = flag(v)?,
            "data.manifest" => self.data.manifest = Some(path(v)),
            "data.train" => synth.train = value(v)?,
            "data.valid" => synth.valid = value(v)?,
            "data.test" => synth.test = value(v)?,
            "data.seen_noises" => synth.seen_noises = value(v)?,
            "data.unseen_noises" => synth.unseen_noises = value(v)?,
            "data.duration_s" => synth.duration_s = value(v)?,
            "data.noise_duration_s" => synth.noise_duration_s = value(v)?,
            "data.snrs" => synth.snrs = list(v)?,
            "data.expansion" => {
                synth.expansion = v.parse::<Expansion>().map_err(|e| e.to_string())?
            }
            "bench.utterances" => self.bench.utterances = value(v)?,
            "bench.frames" => self.bench.frames = value(v)?,
            "bench.warmup" => self.bench.warmup = value(v)?,
            "bench.reps" => self.bench.reps = value(v)?,
            "bench.parallel" => self.bench.parallel = flag(v)?,
            "io.out_dir" => self.out_dir = path(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Corpus parameters with the run seed applied.
    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            seed: self.seed,
            ..self.data.synth.clone()
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            learning_rate: self.train.learning_rate,
            batch: self.train.batch,
            seed: self.seed,
            checkpoint_dir: self
                .train
                .checkpoints
                .then(|| self.out_dir.join("checkpoints")),
        }
    }

    /// Explicit manifest, else the one written by `synth` into the output directory.
    pub fn manifest_path(&self) -> PathBuf {
        self.data
            .manifest
            .clone()
            .unwrap_or_else(|| self.out_dir.join("corpus").join("manifest.tsv"))
    }
}
