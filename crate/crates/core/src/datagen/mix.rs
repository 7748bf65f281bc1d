use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Result of [`mix_at_snr`]: `noisy = clean + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub noisy: Waveform,
    /// The scaled noise component actually added.
    pub noise: Waveform,
    /// Gain applied to the cropped noise.
    pub gain: f64,
}

/// `10 log10(P_signal / P_noise)` with powers taken over the whole signal.
pub fn snr_db(signal: &Waveform, noise: &Waveform) -> f64 {
    10.0 * (signal.power() / noise.power()).log10()
}

/// Crop `noise` to `len` samples from `offset`, wrapping cyclically.
fn crop_cyclic(noise: &[f64], offset: usize, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| noise[(offset + i) % noise.len()])
        .collect()
}

/// Add `noise` to `clean` at exactly `snr_db` decibels.
///
/// A segment of clean's length is taken from a seeded random offset of the
/// noise (wrapping when the noise is shorter) and scaled so the whole-signal
/// power ratio hits the requested SNR.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64, seed: u64) -> Result<Mixture> {
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::invalid(format!(
            "sample rates differ: {} vs {}",
            clean.sample_rate(),
            noise.sample_rate()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr must be finite"));
    }
    let p_clean = clean.power();
    if p_clean <= 0.0 {
        return Err(Error::invalid("clean signal has zero power"));
    }
    if noise.is_empty() {
        return Err(Error::invalid("noise signal is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = if noise.len() >= clean.len() {
        rng.random_range(0..=noise.len() - clean.len())
    } else {
        rng.random_range(0..noise.len())
    };
    let segment = crop_cyclic(noise.samples(), offset, clean.len());
    let p_noise = segment.iter().map(|s| s * s).sum::<f64>() / segment.len() as f64;
    if p_noise <= 0.0 {
        return Err(Error::invalid("noise segment has zero power"));
    }
    let gain = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = segment.iter().map(|s| s * gain).collect();
    let noisy: Vec<f64> = clean
        .samples()
        .iter()
        .zip(&scaled)
        .map(|(c, n)| c + n)
        .collect();
    let sr = clean.sample_rate();
    Ok(Mixture {
        noisy: Waveform::new(noisy, sr)?,
        noise: Waveform::new(scaled, sr)?,
        gain,
    })
}
