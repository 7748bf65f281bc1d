//! Scaled-down full-data learning: 30 noisy-clean epochs, then clean-clean,
//! noise-silence and noisy-clean fine-tuning, scoring the test split after
//! the first stage and after the whole schedule.
//!
//! cargo run --release --example train_full_data -- [stage1_epochs] [width]

use tdnn_enhance::datagen::{
    build_pairs, derive_seed, synth_corpus, CorpusManifest, CorpusSpec, PairKind, Split,
};
use tdnn_enhance::enhance::enhance;
use tdnn_enhance::metrics::{sdr, stoi};
use tdnn_enhance::nn::{ModelConfig, Preset, TdnnModel};
use tdnn_enhance::trainer::{TrainOptions, Trainer, TrainingData};

fn score(model: &TdnnModel, manifest: &CorpusManifest, seed: u64) -> (f64, f64, f64, f64) {
    let pairs = build_pairs(manifest, Split::Test, PairKind::NoisyToClean, seed).unwrap();
    let (mut s_noisy, mut s_enh, mut t_noisy, mut t_enh) = (0.0, 0.0, 0.0, 0.0);
    for p in &pairs {
        let out = enhance(model, &p.input).unwrap();
        s_noisy += sdr(&p.target, &p.input).unwrap();
        s_enh += sdr(&p.target, &out).unwrap();
        t_noisy += stoi(&p.target, &p.input).unwrap();
        t_enh += stoi(&p.target, &out).unwrap();
    }
    let n = pairs.len() as f64;
    (s_noisy / n, s_enh / n, t_noisy / n, t_enh / n)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(30, |a| a.parse().unwrap());
    let width: usize = args.next().map_or(64, |a| a.parse().unwrap());
    let seed = 0;

    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed,
        ..CorpusSpec::default()
    };
    let (_, manifest) = synth_corpus(&spec, dir.path()).unwrap();

    let kinds = [
        PairKind::NoisyToClean,
        PairKind::CleanToClean,
        PairKind::NoiseToSilence,
    ];
    let data = TrainingData::from_manifest(&manifest, kinds, seed).unwrap();
    let config = ModelConfig::from_preset(Preset::TdnnF, width);
    let model = TdnnModel::init(
        &config,
        data.fit_normalization().unwrap(),
        derive_seed(seed, "init"),
    )
    .unwrap();
    let mut trainer = Trainer::new(
        model,
        TrainOptions {
            seed,
            ..TrainOptions::default()
        },
    )
    .unwrap();

    let start = std::time::Instant::now();
    trainer
        .run_stage(PairKind::NoisyToClean, epochs, &data)
        .unwrap();
    for r in trainer.report().unwrap().records {
        println!(
            "{}\t{}\t{:.5}\t{:.5}\t{:.6}",
            r.stage, r.epoch, r.train_loss, r.valid_loss, r.learning_rate
        );
    }
    println!("stage 1 took {:.1}s", start.elapsed().as_secs_f64());
    let stage1 = trainer.best_model().unwrap().clone();
    let (sn, se, tn, te) = score(&stage1, &manifest, seed);
    println!(
        "stage 1 best: sdr noisy {sn:.2} enhanced {se:.2} | stoi noisy {tn:.4} enhanced {te:.4}"
    );

    for (kind, n) in [
        (PairKind::CleanToClean, 5),
        (PairKind::NoiseToSilence, 5),
        (PairKind::NoisyToClean, 5),
    ] {
        trainer.run_stage(kind, n, &data).unwrap();
    }
    let (best, report) = trainer.finish().unwrap();
    for r in report.records.iter().skip(epochs) {
        println!(
            "{}\t{}\t{:.5}\t{:.5}\t{:.6}",
            r.stage, r.epoch, r.train_loss, r.valid_loss, r.learning_rate
        );
    }
    let b = report.best_record();
    println!("best checkpoint: stage {} epoch {}", b.stage, b.epoch);
    let (sn, se, tn, te) = score(&best, &manifest, seed);
    println!(
        "full schedule: sdr noisy {sn:.2} enhanced {se:.2} | stoi noisy {tn:.4} enhanced {te:.4}"
    );
}
