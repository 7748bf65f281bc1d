//! Enhances a WAV file with a saved model, or, with no arguments, trains a
//! tiny model on a synthetic corpus and enhances one of its test mixtures.
//!
//! cargo run --example enhance_file -- [model.tdnn in.wav out.wav]

use std::path::PathBuf;

use tdnn_enhance::cli::cmd_enhance;
use tdnn_enhance::datagen::{build_pairs, synth_corpus, CorpusSpec, PairKind, Split};
use tdnn_enhance::metrics::sdr;
use tdnn_enhance::nn::{save_model, ModelConfig, Preset};
use tdnn_enhance::trainer::{run_schedule, StagePlan, TrainOptions};
use tdnn_enhance::wav::{read_wav, write_wav};

fn main() {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if let [model, input, output] = args.as_slice() {
        cmd_enhance(model, input, output).expect("enhance");
        println!("wrote {}", output.display());
        return;
    }

    let dir = tempfile::tempdir().expect("tempdir");
    let spec = CorpusSpec {
        train: 10,
        valid: 2,
        test: 2,
        duration_s: 2.0,
        ..CorpusSpec::default()
    };
    let (_, manifest) = synth_corpus(&spec, dir.path()).expect("corpus");
    let plan = StagePlan::parse("noisy_clean:5").unwrap();
    let config = ModelConfig::from_preset(Preset::TdnnF, 32);
    let (model, _) =
        run_schedule(&plan, &manifest, &config, TrainOptions::default()).expect("training");
    let model_path = dir.path().join("model.tdnn");
    save_model(&model, &model_path).expect("save");

    let pair = &build_pairs(&manifest, Split::Test, PairKind::NoisyToClean, 0).expect("pairs")[0];
    let (input, output) = (
        dir.path().join("noisy.wav"),
        dir.path().join("enhanced.wav"),
    );
    write_wav(&input, &pair.input).expect("write");
    cmd_enhance(&model_path, &input, &output).expect("enhance");
    let enhanced = read_wav(&output).expect("read");
    println!("{} at {:?} dB", pair.id, pair.snr_db);
    println!("sdr noisy\t{:.2}", sdr(&pair.target, &pair.input).unwrap());
    println!("sdr enhanced\t{:.2}", sdr(&pair.target, &enhanced).unwrap());
}
