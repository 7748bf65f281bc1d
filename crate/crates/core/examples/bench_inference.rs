//! Forward-pass timing for every preset at one width, plus the scaling of
//! time with utterance length.
//!
//! cargo run --release --example bench_inference -- [width] [frames]

use tdnn_enhance::bench::{bench_forward, results_to_tsv, synthetic_inputs};
use tdnn_enhance::nn::{ModelConfig, Normalization, Preset, TdnnModel};

fn main() {
    let mut args = std::env::args().skip(1);
    let width: usize = args.next().map_or(256, |a| a.parse().expect("width"));
    let frames: usize = args.next().map_or(500, |a| a.parse().expect("frames"));

    let inputs = synthetic_inputs(5, frames, 0).expect("inputs");
    let results: Vec<_> = Preset::ALL
        .iter()
        .map(|&p| {
            let model = TdnnModel::init(
                &ModelConfig::from_preset(p, width),
                Normalization::identity(129),
                0,
            )
            .unwrap();
            bench_forward(p.name(), &model, &inputs, 1, 5).expect("bench")
        })
        .collect();
    print!("{}", results_to_tsv(&results));

    let model = TdnnModel::init(
        &ModelConfig::from_preset(Preset::TdnnF, width),
        Normalization::identity(129),
        0,
    )
    .unwrap();
    let double = synthetic_inputs(5, 2 * frames, 0).expect("inputs");
    let t1 = bench_forward("tdnn-f", &model, &inputs, 1, 5)
        .unwrap()
        .mean_ms;
    let t2 = bench_forward("tdnn-f", &model, &double, 1, 5)
        .unwrap()
        .mean_ms;
    println!(
        "\ntime ratio for {} vs {frames} frames\t{:.2}",
        2 * frames,
        t2 / t1
    );
}
