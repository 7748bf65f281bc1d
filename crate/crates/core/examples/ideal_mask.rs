//! Oracle ideal amplitude mask on one mixture per SNR: how much SDR and STOI
//! a perfect mask estimator would recover.
//!
//! cargo run --example ideal_mask -- [seed]

use tdnn_enhance::datagen::{mix_at_snr, synth_noise, synth_speechlike, NoiseKind, DEFAULT_SNRS};
use tdnn_enhance::dsp::{analyze, istft, FFT_SIZE, FRAME_SHIFT};
use tdnn_enhance::masking::{apply_mask, compute_iam, signal_mse};
use tdnn_enhance::metrics::{sdr, stoi};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(5, |a| a.parse().expect("seed"));
    let clean = synth_speechlike(4.0, seed).expect("speech");
    let noise = synth_noise(NoiseKind::Babble, 8.0, seed + 1).expect("noise");
    println!("snr\tsdr noisy\tsdr iam\tstoi noisy\tstoi iam\tloss");
    for &snr in &DEFAULT_SNRS {
        let mix = mix_at_snr(&clean, &noise, snr, seed).expect("mix");
        let (y, phase) = analyze(&mix.noisy).expect("stft");
        let (x, _) = analyze(&clean).expect("stft");
        let mask = compute_iam(&x, &y).expect("mask");
        let est = istft(
            &apply_mask(&y, &mask).unwrap(),
            &phase,
            FRAME_SHIFT,
            FFT_SIZE,
            clean.len(),
            8000,
        )
        .expect("istft");
        println!(
            "{snr}\t{:.2}\t{:.2}\t{:.4}\t{:.4}\t{:.2e}",
            sdr(&clean, &mix.noisy).unwrap(),
            sdr(&clean, &est).unwrap(),
            stoi(&clean, &mix.noisy).unwrap(),
            stoi(&clean, &est).unwrap(),
            signal_mse(&y, &mask, &x).unwrap()
        );
    }
}
