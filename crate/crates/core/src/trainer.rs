//! Staged training: epochs over shuffled utterances, noisy-clean validation
//! after every epoch, learning-rate decay and best-model selection.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datagen::{build_pairs, derive_seed, CorpusManifest, PairKind, Split, TrainingPair};
use crate::dsp::{analyze, MagnitudePlane};
use crate::error::{Error, Result};
use crate::masking::signal_mse;
use crate::nn::{
    adam_step, lr_update, save_model, AdamState, Gradients, ModelConfig, Normalization, TdnnModel,
};

/// Ordered `(pair mode, epochs)` stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    stages: Vec<(PairKind, usize)>,
}

impl StagePlan {
    pub fn new(stages: Vec<(PairKind, usize)>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("stage plan is empty"));
        }
        if let Some((kind, _)) = stages.iter().find(|(_, n)| *n == 0) {
            return Err(Error::invalid(format!("stage {kind} has zero epochs")));
        }
        Ok(StagePlan { stages })
    }

    /// 30 noisy-clean epochs, then 5 each of clean-clean, noise-silence and
    /// noisy-clean fine-tuning.
    pub fn full_data() -> Self {
        StagePlan {
            stages: vec![
                (PairKind::NoisyToClean, 30),
                (PairKind::CleanToClean, 5),
                (PairKind::NoiseToSilence, 5),
                (PairKind::NoisyToClean, 5),
            ],
        }
    }

    /// Parses `mode:epochs,mode:epochs,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let stages = text
            .split(',')
            .map(|item| {
                let (mode, n) = item
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("stage `{item}` is not mode:epochs")))?;
                let n = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("bad epoch count in `{item}`")))?;
                Ok((mode.parse::<PairKind>()?, n))
            })
            .collect::<Result<Vec<_>>>()?;
        StagePlan::new(stages)
    }

    pub fn stages(&self) -> &[(PairKind, usize)] {
        &self.stages
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|(_, n)| n).sum()
    }

    fn kinds(&self) -> impl Iterator<Item = PairKind> + '_ {
        self.stages.iter().map(|(k, _)| *k)
    }
}

impl Default for StagePlan {
    fn default() -> Self {
        StagePlan::full_data()
    }
}

impl fmt::Display for StagePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (kind, n)) in self.stages.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{kind}:{n}")?;
        }
        Ok(())
    }
}

/// Input and target magnitudes of one training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub id: String,
    pub input: MagnitudePlane,
    pub target: MagnitudePlane,
}

/// STFT magnitudes of every pair, in input order.
pub fn featurize(pairs: &[TrainingPair]) -> Result<Vec<FeaturePair>> {
    pairs
        .par_iter()
        .map(|p| {
            Ok(FeaturePair {
                id: p.id.clone(),
                input: analyze(&p.input)?.0,
                target: analyze(&p.target)?.0,
            })
        })
        .collect()
}

/// Precomputed features for the training pair kinds of a plan plus the
/// noisy-clean validation set.
#[derive(Debug, Clone)]
pub struct TrainingData {
    train: HashMap<PairKind, Vec<FeaturePair>>,
    valid: Vec<FeaturePair>,
}

impl TrainingData {
    pub fn new(
        train: HashMap<PairKind, Vec<FeaturePair>>,
        valid: Vec<FeaturePair>,
    ) -> Result<Self> {
        if valid.is_empty() {
            return Err(Error::invalid("validation set is empty"));
        }
        Ok(TrainingData { train, valid })
    }

    /// Builds the train pairs for each kind in `kinds` and the noisy-clean
    /// validation pairs.
    pub fn from_manifest(
        manifest: &CorpusManifest,
        kinds: impl IntoIterator<Item = PairKind>,
        seed: u64,
    ) -> Result<Self> {
        let mut train = HashMap::new();
        for kind in kinds {
            if !train.contains_key(&kind) {
                let pairs = build_pairs(manifest, Split::Train, kind, seed)?;
                train.insert(kind, featurize(&pairs)?);
            }
        }
        let valid = featurize(&build_pairs(
            manifest,
            Split::Valid,
            PairKind::NoisyToClean,
            seed,
        )?)?;
        TrainingData::new(train, valid)
    }

    pub fn train(&self, kind: PairKind) -> Result<&[FeaturePair]> {
        match self.train.get(&kind) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::invalid(format!("no {kind} training pairs"))),
        }
    }

    pub fn valid(&self) -> &[FeaturePair] {
        &self.valid
    }

    /// Input statistics of the noisy-clean training pairs.
    pub fn fit_normalization(&self) -> Result<Normalization> {
        Normalization::fit(self.train(PairKind::NoisyToClean)?.iter().map(|p| &p.input))
    }
}

/// Mean per-utterance loss of `model` over `pairs`.
pub fn evaluate_loss(model: &TdnnModel, pairs: &[FeaturePair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs to evaluate"));
    }
    let losses = pairs
        .par_iter()
        .map(|p| signal_mse(&p.input, &model.forward(&p.input)?, &p.target))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// One pass over `pairs` in an order shuffled by `shuffle_seed`.
///
/// Each optimizer step averages the gradients of `batch` utterances; the
/// returned loss is the mean of the per-utterance losses seen during the
/// pass. `stage` only labels non-finite loss errors.
pub fn run_epoch(
    model: &mut TdnnModel,
    pairs: &[FeaturePair],
    adam: &mut AdamState,
    batch: usize,
    shuffle_seed: u64,
    stage: usize,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("no training pairs"));
    }
    if batch == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));

    let mut total = 0.0;
    for chunk in order.chunks(batch) {
        let results = if chunk.len() == 1 {
            let p = &pairs[chunk[0]];
            vec![model.forward_backward(&p.input, &p.target)?]
        } else {
            let m = &*model;
            chunk
                .par_iter()
                .map(|&i| m.forward_backward(&pairs[i].input, &pairs[i].target))
                .collect::<Result<Vec<_>>>()?
        };
        let mut grads = Gradients::zeros_like(model);
        for (&i, (loss, g)) in chunk.iter().zip(&results) {
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    stage,
                    utterance: pairs[i].id.clone(),
                });
            }
            total += loss;
            grads.add_assign(g);
        }
        if chunk.len() > 1 {
            grads.scale(1.0 / chunk.len() as f64);
        }
        adam_step(model, &grads, adam)?;
    }
    Ok(total / pairs.len() as f64)
}

/// One epoch of the schedule. `stage` and `epoch` count from 1; `epoch`
/// restarts in every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub stage: usize,
    pub mode: PairKind,
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub learning_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    /// Index into `records` of the selected checkpoint.
    pub best: usize,
}

impl TrainReport {
    pub fn best_record(&self) -> &EpochRecord {
        &self.records[self.best]
    }

    /// Records of one stage, in epoch order.
    pub fn stage(&self, stage: usize) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    /// Tab-separated records preceded by `#` lines naming each stage's mode
    /// and the best checkpoint.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let mut last_stage = 0;
        for r in &self.records {
            if r.stage != last_stage {
                out.push_str(&format!("# stage {} {}\n", r.stage, r.mode));
                last_stage = r.stage;
            }
        }
        let best = self.best_record();
        out.push_str(&format!(
            "# best stage {} epoch {}\n",
            best.stage, best.epoch
        ));
        out.push_str("stage\tepoch\ttrain_loss\tvalid_loss\tlr\tseconds\n");
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.3}\n",
                r.stage, r.epoch, r.train_loss, r.valid_loss, r.learning_rate, r.seconds
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub learning_rate: f64,
    /// Utterances per optimizer step.
    pub batch: usize,
    pub seed: u64,
    /// When set, every epoch's model is also written here.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            learning_rate: AdamState::DEFAULT_LEARNING_RATE,
            batch: 1,
            seed: 0,
            checkpoint_dir: None,
        }
    }
}

/// Training state that can be advanced stage by stage.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: TdnnModel,
    adam: AdamState,
    options: TrainOptions,
    records: Vec<EpochRecord>,
    best: Option<(usize, TdnnModel)>,
}

impl Trainer {
    pub fn new(model: TdnnModel, options: TrainOptions) -> Result<Self> {
        if !(options.learning_rate >= 0.0 && options.learning_rate.is_finite()) {
            return Err(Error::invalid(
                "learning rate must be finite and non-negative",
            ));
        }
        if options.batch == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        let adam = AdamState::new(&model, options.learning_rate);
        Ok(Trainer {
            model,
            adam,
            options,
            records: Vec::new(),
            best: None,
        })
    }

    /// Runs `epochs` epochs of `kind` pairs as the next stage.
    pub fn run_stage(&mut self, kind: PairKind, epochs: usize, data: &TrainingData) -> Result<()> {
        if epochs == 0 {
            return Err(Error::invalid("stage needs at least one epoch"));
        }
        let pairs = data.train(kind)?;
        let stage = self.records.last().map_or(1, |r| r.stage + 1);
        for epoch in 1..=epochs {
            let start = Instant::now();
            let lr = self.adam.learning_rate;
            let seed = derive_seed(self.options.seed, &format!("shuffle/{stage}/{epoch}"));
            let train_loss = run_epoch(
                &mut self.model,
                pairs,
                &mut self.adam,
                self.options.batch,
                seed,
                stage,
            )?;
            let valid_loss = evaluate_loss(&self.model, data.valid())?;
            if !valid_loss.is_finite() {
                return Err(Error::NonFinite {
                    stage,
                    utterance: "validation".into(),
                });
            }
            if let Some(prev) = self.records.last() {
                lr_update(&mut self.adam, prev.valid_loss, valid_loss);
            }
            if let Some(dir) = &self.options.checkpoint_dir {
                save_model(
                    &self.model,
                    dir.join(format!("stage{stage}-epoch{epoch:02}.tdnn")),
                )?;
            }
            self.records.push(EpochRecord {
                stage,
                mode: kind,
                epoch,
                train_loss,
                valid_loss,
                learning_rate: lr,
                seconds: start.elapsed().as_secs_f64(),
            });
            let improved = match &self.best {
                None => true,
                Some((i, _)) => valid_loss < self.records[*i].valid_loss,
            };
            if improved {
                self.best = Some((self.records.len() - 1, self.model.clone()));
            }
        }
        Ok(())
    }

    pub fn run_plan(&mut self, plan: &StagePlan, data: &TrainingData) -> Result<()> {
        for &(kind, epochs) in plan.stages() {
            self.run_stage(kind, epochs, data)?;
        }
        Ok(())
    }

    /// Parameters after the most recent epoch.
    pub fn model(&self) -> &TdnnModel {
        &self.model
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    /// Lowest-validation-loss snapshot so far (earliest on ties).
    pub fn best_model(&self) -> Option<&TdnnModel> {
        self.best.as_ref().map(|(_, m)| m)
    }

    pub fn report(&self) -> Option<TrainReport> {
        self.best.as_ref().map(|(i, _)| TrainReport {
            records: self.records.clone(),
            best: *i,
        })
    }

    /// Best model and report; fails if no epoch has run.
    pub fn finish(self) -> Result<(TdnnModel, TrainReport)> {
        let (best, model) = self
            .best
            .ok_or_else(|| Error::invalid("no epochs were run"))?;
        Ok((
            model,
            TrainReport {
                records: self.records,
                best,
            },
        ))
    }
}

/// Initializes a model from `config` with input statistics of the noisy
/// training data, runs `plan` and returns the best snapshot.
pub fn run_schedule(
    plan: &StagePlan,
    manifest: &CorpusManifest,
    config: &ModelConfig,
    options: TrainOptions,
) -> Result<(TdnnModel, TrainReport)> {
    let kinds = std::iter::once(PairKind::NoisyToClean).chain(plan.kinds());
    let data = TrainingData::from_manifest(manifest, kinds, options.seed)?;
    let model = TdnnModel::init(
        config,
        data.fit_normalization()?,
        derive_seed(options.seed, "init"),
    )?;
    let mut trainer = Trainer::new(model, options)?;
    trainer.run_plan(plan, &data)?;
    trainer.finish()
}
