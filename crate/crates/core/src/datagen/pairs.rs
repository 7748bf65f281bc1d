use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::derive_seed;
use super::manifest::{CorpusManifest, ManifestEntry, NoiseCondition, Split};
use super::mix::{mix_at_snr, Mixture};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::wav::read_wav;

/// Input/target relationship of a training pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    NoisyToClean,
    CleanToClean,
    NoiseToSilence,
}

impl PairKind {
    pub fn name(self) -> &'static str {
        match self {
            PairKind::NoisyToClean => "noisy_clean",
            PairKind::CleanToClean => "clean_clean",
            PairKind::NoiseToSilence => "noise_silence",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "noisy_clean" => Ok(PairKind::NoisyToClean),
            "clean_clean" => Ok(PairKind::CleanToClean),
            "noise_silence" => Ok(PairKind::NoiseToSilence),
            other => Err(Error::invalid(format!("unknown pair mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub id: String,
    pub kind: PairKind,
    pub input: Waveform,
    pub target: Waveform,
    pub snr_db: Option<f64>,
    pub condition: NoiseCondition,
}

impl TrainingPair {
    fn new(entry: &ManifestEntry, kind: PairKind, input: Waveform, target: Waveform) -> Self {
        TrainingPair {
            id: entry.id.clone(),
            kind,
            input,
            target,
            snr_db: entry.snr_db,
            condition: entry.condition,
        }
    }
}

/// Reproduce the mixture for one manifest entry.
pub fn mix_entry(
    entry: &ManifestEntry,
    clean: &Waveform,
    noise: &Waveform,
    seed: u64,
) -> Result<Mixture> {
    let snr = entry
        .snr_db
        .ok_or_else(|| Error::invalid(format!("entry `{}` has no snr", entry.id)))?;
    mix_at_snr(clean, noise, snr, derive_seed(seed, &entry.id))
}

type AudioCache = BTreeMap<PathBuf, Arc<Waveform>>;

fn load_all(manifest: &CorpusManifest, entries: &[&ManifestEntry]) -> Result<AudioCache> {
    let mut paths: Vec<PathBuf> = entries
        .iter()
        .flat_map(|e| std::iter::once(&e.clean).chain(e.noise.as_ref()))
        .map(|p| manifest.resolve(p))
        .collect();
    paths.sort();
    paths.dedup();
    paths
        .into_par_iter()
        .map(|p| read_wav(&p).map(|w| (p, Arc::new(w))))
        .collect()
}

/// All pairs of `kind` for one split, in manifest order.
///
/// Noisy-to-clean and noise-to-silence pairs come from entries with a noise;
/// the silence pair's input is the scaled noise component of that entry's
/// mixture. Clean-to-clean pairs use each distinct clean file once.
pub fn build_pairs(
    manifest: &CorpusManifest,
    split: Split,
    kind: PairKind,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    let entries: Vec<&ManifestEntry> = match kind {
        PairKind::CleanToClean => {
            let mut seen = HashSet::new();
            manifest
                .split(split)
                .filter(|e| seen.insert(e.clean.clone()))
                .collect()
        }
        _ => manifest
            .split(split)
            .filter(|e| e.noise.is_some())
            .collect(),
    };
    let audio = load_all(manifest, &entries)?;
    let get = |p: &PathBuf| audio[&manifest.resolve(p)].clone();
    entries
        .par_iter()
        .map(|e| {
            let clean = get(&e.clean);
            match kind {
                PairKind::CleanToClean => Ok(TrainingPair::new(
                    e,
                    kind,
                    (*clean).clone(),
                    (*clean).clone(),
                )),
                PairKind::NoisyToClean | PairKind::NoiseToSilence => {
                    let noise = get(e.noise.as_ref().expect("filtered on noise"));
                    let mix = mix_entry(e, &clean, &noise, seed)?;
                    Ok(if kind == PairKind::NoisyToClean {
                        TrainingPair::new(e, kind, mix.noisy, (*clean).clone())
                    } else {
                        let silence = Waveform::zeros(mix.noise.len(), mix.noise.sample_rate());
                        TrainingPair::new(e, kind, mix.noise, silence)
                    })
                }
            }
        })
        .collect()
}
