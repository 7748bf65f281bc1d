//! Waveform-in, waveform-out enhancement with a trained mask estimator.

use crate::dsp::{analyze, istft, Waveform, FFT_SIZE, FRAME_SHIFT, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::masking::apply_mask;
use crate::nn::TdnnModel;

/// Masks the noisy magnitude, keeps the noisy phase and resynthesizes a
/// signal of the input's length.
pub fn enhance(model: &TdnnModel, noisy: &Waveform) -> Result<Waveform> {
    if noisy.sample_rate() != SAMPLE_RATE {
        return Err(Error::invalid(format!(
            "expected {SAMPLE_RATE} Hz input, got {} Hz",
            noisy.sample_rate()
        )));
    }
    if noisy.is_empty() {
        return Ok(noisy.clone());
    }
    let (mag, phase) = analyze(noisy)?;
    let mask = model.forward(&mag)?;
    let masked = apply_mask(&mag, &mask)?;
    istft(
        &masked,
        &phase,
        FRAME_SHIFT,
        FFT_SIZE,
        noisy.len(),
        SAMPLE_RATE,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::synth_speechlike;
    use crate::nn::{Activation, Context, Normalization, TdnnLayer};
    use ndarray::{Array1, Array2};

    /// Zero weights and unit output bias: the mask is 1 everywhere.
    fn unit_mask_model() -> TdnnModel {
        let hidden = TdnnLayer::new(
            Context::new(-1, 1).unwrap(),
            Array2::zeros((4, 129 * 3)),
            Array1::zeros(4),
            Activation::Relu,
        )
        .unwrap();
        let out = TdnnLayer::new(
            Context::CURRENT,
            Array2::zeros((129, 4)),
            Array1::ones(129),
            Activation::Relu,
        )
        .unwrap();
        TdnnModel::new(vec![hidden, out], Normalization::identity(129)).unwrap()
    }

    #[test]
    fn unit_mask_reproduces_the_input() {
        let x = synth_speechlike(1.0, 2).unwrap();
        let y = enhance(&unit_mask_model(), &x).unwrap();
        assert_eq!(y.len(), x.len());
        let peak = x.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x
            .samples()
            .iter()
            .zip(y.samples())
            .skip(256)
            .take(x.len() - 512)
        {
            assert!((a - b).abs() < 1e-6 * peak);
        }
    }

    #[test]
    fn silence_in_silence_out() {
        let x = Waveform::zeros(4000, 8000);
        let y = enhance(&unit_mask_model(), &x).unwrap();
        assert!(y.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wrong_rate_is_rejected() {
        let x = Waveform::zeros(100, 16000);
        assert!(enhance(&unit_mask_model(), &x).is_err());
    }
}
