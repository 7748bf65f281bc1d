//! Time/frequency conversion: framing, windowing, STFT and overlap-add ISTFT.
//!
//! Frames are centred: the signal is reflect-padded by `fft_size / 2` on both
//! sides so frame `t` is centred on sample `t * frame_shift`, giving
//! `1 + len / frame_shift` frames. Reconstruction reuses the analysis window
//! for synthesis and divides by the running sum of squared windows.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default sample rate of every signal in the pipeline (Hz).
pub const SAMPLE_RATE: u32 = 8000;
/// 32 ms at 8 kHz.
pub const FFT_SIZE: usize = 256;
/// 16 ms at 8 kHz.
pub const FRAME_SHIFT: usize = 128;
/// Retained frequency bins for the default FFT size.
pub const NUM_BINS: usize = FFT_SIZE / 2 + 1;

/// Floor on the overlap-add window normalization.
const WINDOW_SUM_FLOOR: f64 = 1e-8;

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Waveform {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Mean squared sample value over the whole signal.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Complex STFT frames, `T x (fft_size / 2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    frames: Array2<Complex64>,
    fft_size: usize,
    frame_shift: usize,
}

impl ComplexSpectrogram {
    pub fn new(frames: Array2<Complex64>, fft_size: usize, frame_shift: usize) -> Result<Self> {
        if frames.ncols() != fft_size / 2 + 1 {
            return Err(Error::invalid(format!(
                "{} bins does not match fft size {fft_size}",
                frames.ncols()
            )));
        }
        if frames
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::invalid("spectrogram contains non-finite values"));
        }
        Ok(ComplexSpectrogram {
            frames,
            fft_size,
            frame_shift,
        })
    }

    pub fn frames(&self) -> &Array2<Complex64> {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.ncols()
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn frame_shift(&self) -> usize {
        self.frame_shift
    }
}

/// Non-negative `T x F` magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudePlane(Array2<f64>);

impl MagnitudePlane {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("magnitudes must be finite and non-negative"));
        }
        Ok(MagnitudePlane(values))
    }

    pub(crate) fn from_array_unchecked(values: Array2<f64>) -> Self {
        MagnitudePlane(values)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn num_frames(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }
}

/// Phase angles in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlane(Array2<f64>);

impl PhasePlane {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        use std::f64::consts::PI;
        if values.iter().any(|v| !(*v > -PI && *v <= PI)) {
            return Err(Error::invalid("phase values must lie in (-pi, pi]"));
        }
        Ok(PhasePlane(values))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }
}

/// Periodic Hamming window, `0.54 - 0.46 cos(2 pi n / size)`.
pub fn make_analysis_window(size: usize) -> Result<Vec<f64>> {
    if size == 0 || size % 2 != 0 {
        return Err(Error::invalid(format!(
            "window size must be even and positive, got {size}"
        )));
    }
    let n = size as f64;
    Ok((0..size)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / n).cos())
        .collect())
}

/// Number of centred frames for a signal of `len` samples.
pub fn frame_count(len: usize, frame_shift: usize) -> usize {
    1 + len / frame_shift
}

/// Mirror an index into `[0, n)` without repeating the edge sample.
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

fn check_geometry(fft_size: usize, frame_shift: usize) -> Result<()> {
    if fft_size == 0 || fft_size % 2 != 0 {
        return Err(Error::invalid(format!(
            "fft size must be even and positive, got {fft_size}"
        )));
    }
    if frame_shift == 0 {
        return Err(Error::invalid("frame shift must be positive"));
    }
    Ok(())
}

pub fn stft(wave: &Waveform, fft_size: usize, frame_shift: usize) -> Result<ComplexSpectrogram> {
    check_geometry(fft_size, frame_shift)?;
    if wave.is_empty() {
        return Err(Error::invalid("cannot transform an empty waveform"));
    }
    let window = make_analysis_window(fft_size)?;
    let samples = wave.samples();
    let len = samples.len();
    let pad = (fft_size / 2) as isize;
    let num_frames = frame_count(len, frame_shift);
    let num_bins = fft_size / 2 + 1;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut frames = Array2::zeros((num_frames, num_bins));
    for t in 0..num_frames {
        let start = (t * frame_shift) as isize - pad;
        for (n, slot) in buf.iter_mut().enumerate() {
            let x = samples[reflect_index(start + n as isize, len)];
            *slot = Complex64::new(x * window[n], 0.0);
        }
        fft.process(&mut buf);
        for (dst, src) in frames.row_mut(t).iter_mut().zip(&buf[..num_bins]) {
            *dst = *src;
        }
    }
    Ok(ComplexSpectrogram {
        frames,
        fft_size,
        frame_shift,
    })
}

pub fn magnitude(spec: &ComplexSpectrogram) -> MagnitudePlane {
    MagnitudePlane(spec.frames.mapv(|c| c.norm()))
}

pub fn phase(spec: &ComplexSpectrogram) -> PhasePlane {
    PhasePlane(spec.frames.mapv(|c| {
        let a = c.im.atan2(c.re);
        // atan2(-0.0, x < 0) yields -pi
        if a == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            a
        }
    }))
}

/// Recombine magnitude and phase into complex frames.
pub fn polar_to_complex(mag: &MagnitudePlane, ph: &PhasePlane) -> Result<Array2<Complex64>> {
    if mag.shape() != ph.shape() {
        return Err(Error::ShapeMismatch {
            expected: mag.shape(),
            actual: ph.shape(),
        });
    }
    let mut out = Array2::zeros(mag.shape());
    ndarray::Zip::from(&mut out)
        .and(mag.as_array())
        .and(ph.as_array())
        .for_each(|o, &m, &p| *o = Complex64::from_polar(m, p));
    Ok(out)
}

/// Weighted overlap-add inverse of [`stft`], truncated or zero-padded to `out_len`.
pub fn istft(
    mag: &MagnitudePlane,
    ph: &PhasePlane,
    frame_shift: usize,
    fft_size: usize,
    out_len: usize,
    sample_rate: u32,
) -> Result<Waveform> {
    check_geometry(fft_size, frame_shift)?;
    if mag.num_bins() != fft_size / 2 + 1 {
        return Err(Error::invalid(format!(
            "{} bins does not match fft size {fft_size}",
            mag.num_bins()
        )));
    }
    let frames = polar_to_complex(mag, ph)?;
    Ok(overlap_add(
        &frames,
        frame_shift,
        fft_size,
        out_len,
        sample_rate,
    ))
}

pub(crate) fn overlap_add(
    frames: &Array2<Complex64>,
    frame_shift: usize,
    fft_size: usize,
    out_len: usize,
    sample_rate: u32,
) -> Waveform {
    let window = make_analysis_window(fft_size).expect("geometry checked by caller");
    let num_frames = frames.nrows();
    let num_bins = fft_size / 2 + 1;
    let pad = fft_size / 2;
    let padded_len = (num_frames.max(1) - 1) * frame_shift + fft_size;

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(fft_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut acc = vec![0.0; padded_len];
    let mut wsum = vec![0.0; padded_len];
    let scale = 1.0 / fft_size as f64;
    for t in 0..num_frames {
        let row = frames.row(t);
        for k in 0..num_bins {
            buf[k] = row[k];
        }
        for k in num_bins..fft_size {
            buf[k] = row[fft_size - k].conj();
        }
        ifft.process(&mut buf);
        let start = t * frame_shift;
        for n in 0..fft_size {
            acc[start + n] += buf[n].re * scale * window[n];
            wsum[start + n] += window[n] * window[n];
        }
    }

    let samples = (0..out_len)
        .map(|i| {
            let j = i + pad;
            if j < padded_len {
                acc[j] / wsum[j].max(WINDOW_SUM_FLOOR)
            } else {
                0.0
            }
        })
        .collect();
    Waveform {
        samples,
        sample_rate,
    }
}

/// Convenience: magnitude and phase of a waveform under the default geometry.
pub fn analyze(wave: &Waveform) -> Result<(MagnitudePlane, PhasePlane)> {
    let spec = stft(wave, FFT_SIZE, FRAME_SHIFT)?;
    Ok((magnitude(&spec), phase(&spec)))
}
