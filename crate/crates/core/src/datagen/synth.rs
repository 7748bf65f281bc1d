//! Seeded stand-ins for a speech corpus and a noise database.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::derive_seed;
use crate::dsp::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Peak level every synthetic signal is normalized to.
pub const SYNTH_PEAK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Pink,
    Babble,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Pink, NoiseKind::Babble];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::Babble => "babble",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "babble" | "babble-like" => Ok(NoiseKind::Babble),
            other => Err(Error::invalid(format!("unknown noise kind `{other}`"))),
        }
    }
}

fn sample_count(duration_s: f64) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    Ok(((duration_s * SAMPLE_RATE as f64).round() as usize).max(1))
}

fn peak_normalize(mut samples: Vec<f64>) -> Waveform {
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let g = SYNTH_PEAK / peak;
        samples.iter_mut().for_each(|s| *s *= g);
    }
    Waveform::new(samples, SAMPLE_RATE).expect("synthesized samples are finite")
}

struct Formant {
    freq: f64,
    bandwidth: f64,
}

fn formant_gain(formants: &[Formant], f: f64) -> f64 {
    let resonance: f64 = formants
        .iter()
        .map(|fm| 1.0 / (1.0 + ((f - fm.freq) / fm.bandwidth).powi(2)))
        .sum();
    // gentle glottal roll-off
    (0.05 + resonance) / (1.0 + f / 500.0)
}

/// Voiced harmonic bursts under formant envelopes, unvoiced hiss bursts and
/// pauses, peak-normalized to [`SYNTH_PEAK`].
pub fn synth_speechlike(duration_s: f64, seed: u64) -> Result<Waveform> {
    let n = sample_count(duration_s)?;
    let sr = SAMPLE_RATE as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    let talker_f0: f64 = rng.random_range(90.0..220.0);
    let secs = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo..hi) * sr) as usize;

    let mut pos = secs(&mut rng, 0.1, 0.3);
    while pos < n {
        if rng.random_bool(0.25) {
            pos += secs(&mut rng, 0.08, 0.35);
            continue;
        }
        let len = secs(&mut rng, 0.08, 0.3).min(n - pos);
        let gain: f64 = rng.random_range(0.4..1.0);
        if rng.random_bool(0.2) {
            // fricative: first-differenced white noise
            let mut prev = 0.0;
            for i in 0..len {
                let w: f64 = rng.sample(StandardNormal);
                let env = (PI * i as f64 / len as f64).sin();
                out[pos + i] += 0.15 * gain * env * (w - 0.9 * prev);
                prev = w;
            }
        } else {
            let f0_start = talker_f0 * rng.random_range(0.85..1.15);
            let f0_end = f0_start * rng.random_range(0.8..1.2);
            let formants = [
                Formant {
                    freq: rng.random_range(300.0..800.0),
                    bandwidth: rng.random_range(60.0..120.0),
                },
                Formant {
                    freq: rng.random_range(900.0..2300.0),
                    bandwidth: rng.random_range(80.0..160.0),
                },
                Formant {
                    freq: rng.random_range(2400.0..3400.0),
                    bandwidth: rng.random_range(120.0..220.0),
                },
            ];
            let am_rate: f64 = rng.random_range(3.0..8.0);
            let mid_f0 = 0.5 * (f0_start + f0_end);
            let harmonics = (3800.0 / f0_start.max(f0_end)).floor().max(1.0) as usize;
            let amps: Vec<f64> = (1..=harmonics)
                .map(|h| formant_gain(&formants, h as f64 * mid_f0))
                .collect();
            let mut phase: Vec<f64> = (0..harmonics)
                .map(|_| rng.random_range(0.0..2.0 * PI))
                .collect();
            for i in 0..len {
                let frac = i as f64 / len as f64;
                let f0 = f0_start + (f0_end - f0_start) * frac;
                let env = (PI * frac).sin().powf(0.7)
                    * (1.0 + 0.3 * (2.0 * PI * am_rate * i as f64 / sr).sin());
                let mut acc = 0.0;
                for (h, (ph, a)) in phase.iter_mut().zip(&amps).enumerate() {
                    *ph += 2.0 * PI * (h + 1) as f64 * f0 / sr;
                    acc += a * ph.sin();
                }
                out[pos + i] += gain * env * acc;
            }
        }
        pos += len + secs(&mut rng, 0.0, 0.05);
    }
    Ok(peak_normalize(out))
}

pub fn synth_noise(kind: NoiseKind, duration_s: f64, seed: u64) -> Result<Waveform> {
    let n = sample_count(duration_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match kind {
        NoiseKind::White => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        NoiseKind::Pink => {
            // Kellet's economy filter bank
            let mut b = [0.0f64; 7];
            (0..n)
                .map(|_| {
                    let w: f64 = rng.sample(StandardNormal);
                    b[0] = 0.99886 * b[0] + w * 0.0555179;
                    b[1] = 0.99332 * b[1] + w * 0.0750759;
                    b[2] = 0.96900 * b[2] + w * 0.1538520;
                    b[3] = 0.86650 * b[3] + w * 0.3104856;
                    b[4] = 0.55000 * b[4] + w * 0.5329522;
                    b[5] = -0.7616 * b[5] - w * 0.0168980;
                    let pink = b.iter().sum::<f64>() + w * 0.5362;
                    b[6] = w * 0.115926;
                    pink
                })
                .collect()
        }
        NoiseKind::Babble => {
            let talkers = rng.random_range(4..=6);
            let mut acc = vec![0.0; n];
            for k in 0..talkers {
                let voice = synth_speechlike(duration_s, derive_seed(seed, &format!("talker{k}")))?;
                for (a, v) in acc.iter_mut().zip(voice.samples()) {
                    *a += v;
                }
            }
            acc
        }
    };
    Ok(peak_normalize(samples))
}
