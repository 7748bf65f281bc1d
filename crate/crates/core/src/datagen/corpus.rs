use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::derive_seed;
use super::manifest::{CorpusManifest, ManifestEntry, NoiseCondition, Split};
use super::synth::{synth_noise, synth_speechlike, NoiseKind};
use crate::error::{Error, Result};
use crate::wav::write_wav;

pub const DEFAULT_SNRS: [f64; 6] = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

/// How clean utterances are combined with noises and SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// Every clean utterance with every noise at every SNR.
    Exhaustive,
    /// One mixture per clean utterance: SNRs cycled in order, noise drawn at random.
    Balanced,
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expansion::Exhaustive => "exhaustive",
            Expansion::Balanced => "balanced",
        })
    }
}

impl FromStr for Expansion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exhaustive" => Ok(Expansion::Exhaustive),
            "balanced" | "random" => Ok(Expansion::Balanced),
            other => Err(Error::invalid(format!("unknown expansion `{other}`"))),
        }
    }
}

/// Shape of a synthetic corpus. Validation mixtures are always balanced;
/// `expansion` governs train and test.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub seen_noises: usize,
    pub unseen_noises: usize,
    pub duration_s: f64,
    pub noise_duration_s: f64,
    pub snrs: Vec<f64>,
    pub expansion: Expansion,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            train: 50,
            valid: 10,
            test: 10,
            seen_noises: 3,
            unseen_noises: 3,
            duration_s: 8.0,
            noise_duration_s: 16.0,
            snrs: DEFAULT_SNRS.to_vec(),
            expansion: Expansion::Exhaustive,
            seed: 0,
        }
    }
}

struct NoiseFile {
    name: String,
    path: PathBuf,
    kind: NoiseKind,
    seed: u64,
}

struct CleanFile {
    split: Split,
    index: usize,
    path: PathBuf,
    seed: u64,
}

fn snr_tag(snr: f64) -> String {
    if snr < 0.0 {
        format!("m{}", -snr)
    } else {
        format!("p{snr}")
    }
}

/// Write clean utterances, noises and `manifest.tsv` under `out_dir`.
pub fn synth_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<(PathBuf, CorpusManifest)> {
    if spec.train == 0 {
        return Err(Error::invalid(
            "at least one training utterance is required",
        ));
    }
    if spec.seen_noises == 0 {
        return Err(Error::invalid("at least one training noise is required"));
    }
    if spec.snrs.is_empty() || spec.snrs.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("snr list must be non-empty and finite"));
    }
    for dir in ["clean", "noise"] {
        let d = out_dir.join(dir);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }

    let noise_files: Vec<(NoiseCondition, NoiseFile)> = (0..spec.seen_noises)
        .map(|i| (NoiseCondition::Seen, i))
        .chain((0..spec.unseen_noises).map(|i| (NoiseCondition::Unseen, i)))
        .map(|(cond, i)| {
            // unseen noises rotate the kind order so they differ in character too
            let shift = if cond == NoiseCondition::Unseen { 2 } else { 0 };
            let kind = NoiseKind::ALL[(i + shift) % NoiseKind::ALL.len()];
            let name = format!("{cond}{i:02}-{kind}");
            let path = PathBuf::from("noise").join(format!("{name}.wav"));
            let seed = derive_seed(spec.seed, &format!("noise/{name}"));
            (
                cond,
                NoiseFile {
                    name,
                    path,
                    kind,
                    seed,
                },
            )
        })
        .collect();
    let clean_files: Vec<CleanFile> = [
        (Split::Train, spec.train),
        (Split::Valid, spec.valid),
        (Split::Test, spec.test),
    ]
    .into_iter()
    .flat_map(|(split, n)| (0..n).map(move |index| (split, index)))
    .map(|(split, index)| CleanFile {
        split,
        index,
        path: PathBuf::from("clean").join(format!("{split}{index:04}.wav")),
        seed: derive_seed(spec.seed, &format!("clean/{split}/{index}")),
    })
    .collect();

    noise_files.par_iter().try_for_each(|(_, n)| {
        let wave = synth_noise(n.kind, spec.noise_duration_s, n.seed)?;
        write_wav(out_dir.join(&n.path), &wave)
    })?;
    clean_files.par_iter().try_for_each(|c| {
        let wave = synth_speechlike(spec.duration_s, c.seed)?;
        write_wav(out_dir.join(&c.path), &wave)
    })?;

    let seen: Vec<&NoiseFile> = noise_files
        .iter()
        .filter(|(c, _)| *c == NoiseCondition::Seen)
        .map(|(_, n)| n)
        .collect();
    let unseen: Vec<&NoiseFile> = noise_files
        .iter()
        .filter(|(c, _)| *c == NoiseCondition::Unseen)
        .map(|(_, n)| n)
        .collect();

    let mut entries = Vec::new();
    for c in &clean_files {
        let base = format!("{}{:04}", c.split, c.index);
        let mut push = |id: String, noise: &NoiseFile, snr: f64, condition| {
            entries.push(ManifestEntry {
                id,
                split: c.split,
                clean: c.path.clone(),
                noise: Some(noise.path.clone()),
                snr_db: Some(snr),
                condition,
            })
        };
        let exhaustive = spec.expansion == Expansion::Exhaustive && c.split != Split::Valid;
        if exhaustive {
            let pool: Vec<(&NoiseFile, NoiseCondition)> = seen
                .iter()
                .map(|n| (*n, NoiseCondition::Seen))
                .chain(
                    unseen
                        .iter()
                        .filter(|_| c.split == Split::Test)
                        .map(|n| (*n, NoiseCondition::Unseen)),
                )
                .collect();
            for (noise, cond) in pool {
                for &snr in &spec.snrs {
                    push(
                        format!("{base}-{}-{}", noise.name, snr_tag(snr)),
                        noise,
                        snr,
                        cond,
                    );
                }
            }
        } else {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("assign/{base}")));
            let use_unseen = c.split == Split::Test && !unseen.is_empty() && c.index % 2 == 1;
            let (pool, cond) = if use_unseen {
                (&unseen, NoiseCondition::Unseen)
            } else {
                (&seen, NoiseCondition::Seen)
            };
            let noise = pool[rng.random_range(0..pool.len())];
            let snr = spec.snrs[c.index % spec.snrs.len()];
            push(base, noise, snr, cond);
        }
    }

    let manifest = CorpusManifest::new(entries, out_dir)?;
    let path = out_dir.join("manifest.tsv");
    manifest.save(&path)?;
    Ok((path, manifest))
}
