//! Short-time objective intelligibility.
//!
//! Both signals are brought to 10 kHz, frames whose reference energy is more
//! than 40 dB below the loudest frame are dropped, and 15 one-third-octave
//! band envelopes (150 Hz upwards) are taken from 256-sample Hann frames
//! zero-padded to 512 points. Over every run of 30 consecutive frames the
//! degraded envelope is scaled to the reference energy, clipped to at most
//! `1 + 10^(15/20)` times the reference, and correlated with it. The score is
//! the mean correlation over bands and runs.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::resample::resample;
use crate::dsp::Waveform;
use crate::error::{Error, Result};

const STOI_RATE: u32 = 10_000;
const FRAME_LEN: usize = 256;
const FRAME_HOP: usize = 128;
const FFT_LEN: usize = 512;
const NUM_BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
/// Frames per intermediate-intelligibility segment (384 ms).
const SEGMENT_FRAMES: usize = 30;
/// Lower signal-to-distortion bound in dB for the clipping step.
const BETA_DB: f64 = -15.0;
const DYNAMIC_RANGE_DB: f64 = 40.0;

/// Symmetric Hann window without the zero end points.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).cos())
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME_LEN)).step_by(FRAME_HOP)
}

/// Drop frames quieter than the loudest reference frame minus the dynamic
/// range, then overlap-add the windowed survivors.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = hann(FRAME_LEN);
    let windowed = |s: &[f64], start: usize| -> Vec<f64> {
        s[start..start + FRAME_LEN]
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .collect()
    };
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = windowed(x, s).iter().map(|v| v * v).sum();
            20.0 * (e.sqrt() + f64::EPSILON).log10()
        })
        .collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, e)| max - DYNAMIC_RANGE_DB - **e < 0.0)
        .map(|(s, _)| *s)
        .collect();
    if kept.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let out_len = (kept.len() - 1) * FRAME_HOP + FRAME_LEN;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (k, &s) in kept.iter().enumerate() {
        let at = k * FRAME_HOP;
        for (i, (a, b)) in windowed(x, s).into_iter().zip(windowed(y, s)).enumerate() {
            xs[at + i] += a;
            ys[at + i] += b;
        }
    }
    (xs, ys)
}

/// `(first_bin, end_bin)` of each one-third-octave band on the FFT grid.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let bin_hz = STOI_RATE as f64 / FFT_LEN as f64;
    let bins = FFT_LEN / 2 + 1;
    let nearest = |f: f64| -> usize {
        (0..bins)
            .min_by(|&a, &b| {
                let da = (a as f64 * bin_hz - f).powi(2);
                let db = (b as f64 * bin_hz - f).powi(2);
                da.total_cmp(&db)
            })
            .expect("non-empty grid")
    };
    (0..NUM_BANDS)
        .map(|k| {
            let low = MIN_FREQ * 2f64.powf((2 * k) as f64 / 6.0 - 1.0 / 6.0);
            let high = MIN_FREQ * 2f64.powf((2 * k) as f64 / 6.0 + 1.0 / 6.0);
            (nearest(low), nearest(high))
        })
        .collect()
}

/// Band envelopes, `[band][frame]`.
fn band_envelopes(x: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let w = hann(FRAME_LEN);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FFT_LEN);
    let mut out = vec![Vec::new(); bands.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    for start in frame_starts(x.len()) {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for i in 0..FRAME_LEN {
            buf[i].re = x[start + i] * w[i];
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            let power: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            out[b].push(power.sqrt());
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Correlation coefficient; zero when either side has no variance.
fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (a, b) = (a - mx, b - my);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        0.0
    } else {
        xy / (xx * yy).sqrt()
    }
}

/// Intelligibility of `estimate` against `reference`, clipped to `[0, 1]`.
pub fn stoi(reference: &Waveform, estimate: &Waveform) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.sample_rate() != estimate.sample_rate() {
        return Err(Error::invalid("sample rates differ"));
    }
    let rate = reference.sample_rate();
    if rate != 8000 && rate != STOI_RATE {
        return Err(Error::invalid(format!("unsupported sample rate {rate} Hz")));
    }
    let x = resample(reference.samples(), rate, STOI_RATE);
    let y = resample(estimate.samples(), rate, STOI_RATE);
    let (x, y) = remove_silent_frames(&x, &y);

    let bands = third_octave_bands();
    let x_env = band_envelopes(&x, &bands);
    let y_env = band_envelopes(&y, &bands);
    let frames = x_env[0].len();
    if frames < SEGMENT_FRAMES {
        return Err(Error::TooShort(format!(
            "{frames} active frames after silence removal, need {SEGMENT_FRAMES}"
        )));
    }

    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    let mut y_clipped = vec![0.0; SEGMENT_FRAMES];
    for end in SEGMENT_FRAMES..=frames {
        for (xb, yb) in x_env.iter().zip(&y_env) {
            let xs = &xb[end - SEGMENT_FRAMES..end];
            let ys = &yb[end - SEGMENT_FRAMES..end];
            let ny = norm(ys);
            let alpha = if ny > 0.0 { norm(xs) / ny } else { 0.0 };
            for ((out, &yv), &xv) in y_clipped.iter_mut().zip(ys).zip(xs) {
                *out = (yv * alpha).min(xv * clip);
            }
            total += correlation(xs, &y_clipped);
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(0.0, 1.0))
}
