//! Mono 8 kHz WAV reading (16-bit PCM or 32-bit float) and 16-bit writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::AudioFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        other => format_error(path, other.to_string()),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| hound_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format_error(
            path,
            format!("{} channels, expected mono", spec.channels),
        ));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(format_error(
            path,
            format!(
                "sample rate {} Hz, expected {SAMPLE_RATE} Hz",
                spec.sample_rate
            ),
        ));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_error(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_error(path, e))?,
        (fmt, bits) => {
            return Err(format_error(
                path,
                format!("{bits}-bit {fmt:?} samples are not supported"),
            ))
        }
    };
    Waveform::new(samples, spec.sample_rate).map_err(|e| format_error(path, e.to_string()))
}

/// Quantize to 16-bit PCM: clip to [-1, 1], round to nearest.
pub fn to_pcm16(wave: &Waveform) -> Vec<i16> {
    wave.samples()
        .iter()
        .map(|s| {
            (s.clamp(-1.0, 1.0) * PCM16_SCALE)
                .round()
                .clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

pub fn write_wav(path: impl AsRef<Path>, wave: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_error(path, e))?;
    for s in to_pcm16(wave) {
        writer.write_sample(s).map_err(|e| hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| hound_error(path, e))
}
