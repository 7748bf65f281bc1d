//! Corpus construction: synthetic speech and noise, SNR-exact mixing,
//! manifests, and the three kinds of training pairs.
//!
//! Every random choice is drawn from a stream seeded by `(seed, name)`, where
//! `name` identifies the utterance or file, so results never depend on the
//! order in which entries are processed.

mod corpus;
mod manifest;
mod mix;
mod pairs;
mod synth;

pub use corpus::{synth_corpus, CorpusSpec, Expansion, DEFAULT_SNRS};
pub use manifest::{CorpusManifest, ManifestEntry, NoiseCondition, Split};
pub use mix::{mix_at_snr, snr_db, Mixture};
pub use pairs::{build_pairs, mix_entry, PairKind, TrainingPair};
pub use synth::{synth_noise, synth_speechlike, NoiseKind, SYNTH_PEAK};

/// Stable per-name seed: FNV-1a of `name` mixed into `seed` with splitmix64.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
