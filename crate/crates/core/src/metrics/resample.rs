//! Rational-ratio polyphase resampling with a windowed-sinc kernel.

use std::f64::consts::PI;

/// Kernel length per output sample.
pub const RESAMPLE_TAPS: usize = 32;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Resample `x` from `from_rate` to `to_rate`.
///
/// Output sample `m` sits at input position `m * down / up`; it is formed
/// from the 32 nearest inputs weighted by a Blackman-windowed sinc whose
/// cutoff is 0.9 of the lower Nyquist frequency, each phase normalized to
/// unit DC gain.
pub fn resample(x: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    if from_rate == to_rate || x.is_empty() {
        return x.to_vec();
    }
    let g = gcd(from_rate, to_rate);
    let (up, down) = ((to_rate / g) as usize, (from_rate / g) as usize);
    // cutoff in cycles per input sample, relative to input Nyquist
    let cutoff = 0.9 * (up as f64 / down as f64).min(1.0);
    let half = (RESAMPLE_TAPS / 2) as isize;

    let kernels: Vec<Vec<f64>> = (0..up)
        .map(|phase| {
            let frac = phase as f64 / up as f64;
            let mut k: Vec<f64> = (-half + 1..=half)
                .map(|tap| {
                    let t = tap as f64 - frac;
                    let w = 0.42
                        + 0.5 * (PI * t / half as f64).cos()
                        + 0.08 * (2.0 * PI * t / half as f64).cos();
                    cutoff * sinc(cutoff * t) * w.max(0.0)
                })
                .collect();
            let sum: f64 = k.iter().sum();
            k.iter_mut().for_each(|v| *v /= sum);
            k
        })
        .collect();

    let out_len = (x.len() * up).div_ceil(down);
    (0..out_len)
        .map(|m| {
            let pos = m * down;
            let base = (pos / up) as isize;
            let kernel = &kernels[pos % up];
            kernel
                .iter()
                .zip(-half + 1..=half)
                .map(|(h, tap)| {
                    let i = base + tap;
                    if i >= 0 && (i as usize) < x.len() {
                        h * x[i as usize]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}
