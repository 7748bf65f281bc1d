//! Analysis and resynthesis of a synthetic utterance, reporting the frame
//! geometry and the reconstruction error away from the edges.
//!
//! cargo run --example stft_roundtrip -- [seconds] [seed]

use tdnn_enhance::datagen::synth_speechlike;
use tdnn_enhance::dsp::{analyze, istft, FFT_SIZE, FRAME_SHIFT, NUM_BINS};

fn main() {
    let mut args = std::env::args().skip(1);
    let seconds: f64 = args.next().map_or(2.0, |a| a.parse().expect("seconds"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));

    let x = synth_speechlike(seconds, seed).expect("synthesis");
    let (mag, phase) = analyze(&x).expect("stft");
    let y = istft(
        &mag,
        &phase,
        FRAME_SHIFT,
        FFT_SIZE,
        x.len(),
        x.sample_rate(),
    )
    .expect("istft");

    let peak = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let interior = FFT_SIZE..x.len() - FFT_SIZE;
    let worst = interior
        .map(|i| (x.samples()[i] - y.samples()[i]).abs())
        .fold(0.0, f64::max);
    println!("samples\t{}", x.len());
    println!(
        "frames\t{} x {} bins (expected {NUM_BINS})",
        mag.num_frames(),
        mag.num_bins()
    );
    println!("interior error / peak\t{:.3e}", worst / peak);
}
