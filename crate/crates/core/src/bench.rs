//! Forward-pass latency. Features are computed before timing starts, so the
//! numbers cover the network only.

use std::time::Instant;

use rayon::prelude::*;

use crate::datagen::{derive_seed, synth_noise, synth_speechlike, NoiseKind};
use crate::dsp::{analyze, MagnitudePlane, Waveform, FRAME_SHIFT, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::nn::TdnnModel;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: String,
    pub utterance_count: usize,
    /// Mean frame count of the inputs.
    pub frames_per_utterance: f64,
    /// Mean per-utterance forward time.
    pub mean_ms: f64,
    pub std_ms: f64,
    pub frames_per_second: f64,
    /// Every measured per-utterance time, rep-major.
    pub samples_ms: Vec<f64>,
    /// Time of each measured pass over all utterances.
    pub rep_totals_ms: Vec<f64>,
}

impl BenchResult {
    fn from_samples(
        config: &str,
        utterances: &[MagnitudePlane],
        samples_ms: Vec<f64>,
        rep_totals_ms: Vec<f64>,
    ) -> Self {
        let n = samples_ms.len() as f64;
        let mean_ms = samples_ms.iter().sum::<f64>() / n;
        let var = samples_ms
            .iter()
            .map(|t| (t - mean_ms).powi(2))
            .sum::<f64>()
            / n;
        let frames: usize = utterances.iter().map(|u| u.num_frames()).sum();
        let total_s = rep_totals_ms.iter().sum::<f64>() / 1000.0;
        BenchResult {
            config: config.to_string(),
            utterance_count: utterances.len(),
            frames_per_utterance: frames as f64 / utterances.len() as f64,
            mean_ms,
            std_ms: var.sqrt(),
            frames_per_second: (frames * rep_totals_ms.len()) as f64 / total_s,
            samples_ms,
            rep_totals_ms,
        }
    }

    /// Standard deviation over mean of the per-pass totals.
    pub fn rep_coefficient_of_variation(&self) -> f64 {
        let n = self.rep_totals_ms.len() as f64;
        let mean = self.rep_totals_ms.iter().sum::<f64>() / n;
        let var = self
            .rep_totals_ms
            .iter()
            .map(|t| (t - mean).powi(2))
            .sum::<f64>()
            / n;
        var.sqrt() / mean
    }
}

fn check(utterances: &[MagnitudePlane], warmup: usize, reps: usize) -> Result<()> {
    if utterances.is_empty() {
        return Err(Error::invalid("no utterances to benchmark"));
    }
    if reps < 3 {
        return Err(Error::invalid("benchmark needs at least 3 measured passes"));
    }
    if warmup < 1 {
        return Err(Error::invalid("benchmark needs at least 1 warmup pass"));
    }
    Ok(())
}

fn same(a: &[Mask], b: &[Mask]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.as_array() == y.as_array())
}

/// Times `model.forward` on each utterance, single-threaded.
///
/// Every pass, warmup or measured, must reproduce the first warmup output
/// bit for bit.
pub fn bench_forward(
    config: &str,
    model: &TdnnModel,
    utterances: &[MagnitudePlane],
    warmup: usize,
    reps: usize,
) -> Result<BenchResult> {
    check(utterances, warmup, reps)?;
    let reference: Vec<Mask> = utterances
        .iter()
        .map(|u| model.forward(u))
        .collect::<Result<_>>()?;
    for _ in 1..warmup {
        let out: Vec<Mask> = utterances
            .iter()
            .map(|u| model.forward(u))
            .collect::<Result<_>>()?;
        if !same(&out, &reference) {
            return Err(Error::NondeterministicOutput);
        }
    }
    let mut samples = Vec::with_capacity(reps * utterances.len());
    let mut totals = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut out = Vec::with_capacity(utterances.len());
        let mut total = 0.0;
        for u in utterances {
            let start = Instant::now();
            let mask = model.forward(u)?;
            let ms = start.elapsed().as_secs_f64() * 1000.0;
            samples.push(ms);
            total += ms;
            out.push(mask);
        }
        totals.push(total);
        if !same(&out, &reference) {
            return Err(Error::NondeterministicOutput);
        }
    }
    Ok(BenchResult::from_samples(
        config, utterances, samples, totals,
    ))
}

/// Like [`bench_forward`] but each pass runs the utterances in parallel on
/// the current rayon pool; per-utterance times are pass time over count.
pub fn bench_forward_parallel(
    config: &str,
    model: &TdnnModel,
    utterances: &[MagnitudePlane],
    warmup: usize,
    reps: usize,
) -> Result<BenchResult> {
    check(utterances, warmup, reps)?;
    let pass =
        || -> Result<Vec<Mask>> { utterances.par_iter().map(|u| model.forward(u)).collect() };
    let reference = pass()?;
    for _ in 1..warmup {
        if !same(&pass()?, &reference) {
            return Err(Error::NondeterministicOutput);
        }
    }
    let mut samples = Vec::new();
    let mut totals = Vec::new();
    for _ in 0..reps {
        let start = Instant::now();
        let out = pass()?;
        let ms = start.elapsed().as_secs_f64() * 1000.0;
        if !same(&out, &reference) {
            return Err(Error::NondeterministicOutput);
        }
        totals.push(ms);
        samples.extend(std::iter::repeat_n(
            ms / utterances.len() as f64,
            utterances.len(),
        ));
    }
    Ok(BenchResult::from_samples(
        config, utterances, samples, totals,
    ))
}

/// Mean milliseconds to compute STFT magnitude and phase of one waveform.
pub fn bench_stft(waves: &[Waveform], reps: usize) -> Result<f64> {
    if waves.is_empty() || reps == 0 {
        return Err(Error::invalid("nothing to time"));
    }
    let start = Instant::now();
    for _ in 0..reps {
        for w in waves {
            analyze(w)?;
        }
    }
    Ok(start.elapsed().as_secs_f64() * 1000.0 / (reps * waves.len()) as f64)
}

/// Seeded noisy speech-like waveforms of exactly `frames` STFT frames.
pub fn synthetic_waveforms(count: usize, frames: usize, seed: u64) -> Result<Vec<Waveform>> {
    if frames == 0 {
        return Err(Error::invalid("frame count must be positive"));
    }
    let len = (frames - 1) * FRAME_SHIFT;
    let duration = len as f64 / SAMPLE_RATE as f64;
    (0..count)
        .map(|i| {
            let speech =
                synth_speechlike(duration, derive_seed(seed, &format!("bench-speech{i}")))?;
            let noise = synth_noise(
                NoiseKind::Pink,
                duration,
                derive_seed(seed, &format!("bench-noise{i}")),
            )?;
            let mut s: Vec<f64> = speech
                .samples()
                .iter()
                .zip(noise.samples())
                .map(|(a, b)| a + 0.3 * b)
                .collect();
            s.resize(len, 0.0);
            Waveform::new(s, SAMPLE_RATE)
        })
        .collect()
}

/// Magnitudes of [`synthetic_waveforms`].
pub fn synthetic_inputs(count: usize, frames: usize, seed: u64) -> Result<Vec<MagnitudePlane>> {
    synthetic_waveforms(count, frames, seed)?
        .iter()
        .map(|w| analyze(w).map(|(m, _)| m))
        .collect()
}

/// Tab-separated table of results.
pub fn results_to_tsv(results: &[BenchResult]) -> String {
    let mut out = String::from("config\tutterances\tframes\tmean_ms\tstd_ms\tframes_per_s\n");
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.1}\n",
            r.config,
            r.utterance_count,
            r.frames_per_utterance,
            r.mean_ms,
            r.std_ms,
            r.frames_per_second
        ));
    }
    out
}
