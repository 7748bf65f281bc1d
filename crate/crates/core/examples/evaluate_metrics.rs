//! STOI and SDR over a noise ladder, then the grouped summary table for the
//! unprocessed mixtures of a synthetic test split.
//!
//! cargo run --example evaluate_metrics

use tdnn_enhance::cli::{cmd_evaluate, cmd_synth, EvalSource, RunConfig};
use tdnn_enhance::datagen::Split;
use tdnn_enhance::datagen::{synth_noise, synth_speechlike, NoiseKind};
use tdnn_enhance::dsp::Waveform;
use tdnn_enhance::metrics::{sdr, stoi, summary_to_tsv};

fn main() {
    let x = synth_speechlike(3.0, 1).expect("speech");
    let n = synth_noise(NoiseKind::White, 3.0, 2).expect("noise");
    println!("noise gain\tsdr\tstoi");
    for g in [0.0, 0.01, 0.03, 0.1, 0.3, 1.0] {
        let y = Waveform::new(
            x.samples()
                .iter()
                .zip(n.samples())
                .map(|(a, b)| a + g * b)
                .collect(),
            8000,
        )
        .unwrap();
        println!(
            "{g}\t{:.2}\t{:.4}",
            sdr(&x, &y).unwrap(),
            stoi(&x, &y).unwrap()
        );
    }

    let dir = tempfile::tempdir().expect("tempdir");
    let text = "data.train = 2\ndata.valid = 1\ndata.test = 12\ndata.duration_s = 2.0\n";
    let mut cfg = RunConfig::parse(text, dir.path()).expect("config");
    cfg.out_dir = dir.path().to_path_buf();
    cmd_synth(&cfg).expect("synth");
    let eval = cmd_evaluate(&cfg, &EvalSource::Noisy, Split::Test).expect("evaluate");
    print!("\n{}", summary_to_tsv(&eval.rows).unwrap());
}
