//! Writes a small synthetic corpus and checks that every mixture lands on
//! its requested SNR.
//!
//! cargo run --example mix_corpus -- [out_dir]

use std::path::PathBuf;

use tdnn_enhance::datagen::{
    build_pairs, snr_db, synth_corpus, CorpusSpec, Expansion, PairKind, Split,
};

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("tdnn-corpus"), PathBuf::from);
    let spec = CorpusSpec {
        train: 4,
        valid: 2,
        test: 4,
        duration_s: 2.0,
        expansion: Expansion::Exhaustive,
        ..CorpusSpec::default()
    };
    let (path, manifest) = synth_corpus(&spec, &out).expect("synthesis");
    println!("manifest\t{}", path.display());
    for split in [Split::Train, Split::Valid, Split::Test] {
        println!("{split}\t{} entries", manifest.split(split).count());
    }
    let pairs =
        build_pairs(&manifest, Split::Train, PairKind::NoisyToClean, spec.seed).expect("pairs");
    let noise =
        build_pairs(&manifest, Split::Train, PairKind::NoiseToSilence, spec.seed).expect("pairs");
    let worst = pairs
        .iter()
        .zip(&noise)
        .map(|(p, n)| (snr_db(&p.target, &n.input) - p.snr_db.unwrap()).abs())
        .fold(0.0, f64::max);
    println!(
        "worst SNR error over {} mixtures\t{worst:.2e} dB",
        pairs.len()
    );
}
