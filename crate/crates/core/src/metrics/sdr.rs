use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Value reported when the residual is negligible against the reference.
pub const SDR_CAP_DB: f64 = 100.0;

/// Plain signal-to-distortion ratio `10 log10(Σx² / Σ(x - x̂)²)` in dB.
pub fn sdr(reference: &Waveform, estimate: &Waveform) -> Result<f64> {
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
    let signal = reference.energy();
    if signal == 0.0 {
        return Err(Error::invalid("reference has zero energy"));
    }
    let distortion: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    if distortion < 1e-20 * signal {
        return Ok(SDR_CAP_DB);
    }
    Ok(10.0 * (signal / distortion).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(v: Vec<f64>) -> Waveform {
        Waveform::new(v, 8000).unwrap()
    }

    #[test]
    fn identity_hits_the_cap() {
        let x = wave(vec![0.1, -0.2, 0.3]);
        assert_eq!(sdr(&x, &x).unwrap(), SDR_CAP_DB);
    }

    #[test]
    fn silent_estimate_is_zero_db() {
        let x = wave(vec![0.1, -0.2, 0.3]);
        assert_eq!(sdr(&x, &Waveform::zeros(3, 8000)).unwrap(), 0.0);
    }

    #[test]
    fn equal_power_noise_is_zero_db() {
        let x = wave(vec![1.0, 0.0, -1.0, 0.0]);
        let y = wave(vec![1.0, 1.0, -1.0, -1.0]);
        assert!(sdr(&x, &y).unwrap().abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let z = Waveform::zeros(3, 8000);
        assert!(sdr(&z, &z).is_err());
        let x = wave(vec![1.0, 2.0]);
        assert!(sdr(&x, &wave(vec![1.0])).is_err());
        let y = Waveform::new(vec![1.0, 2.0], 16000).unwrap();
        assert!(sdr(&x, &y).is_err());
    }
}
