//! Speech enhancement by time-delay neural network mask estimation.
//!
//! The noisy waveform is taken to the STFT domain, a feed-forward TDNN maps
//! noisy magnitudes to a non-negative mask, and the masked magnitude is
//! recombined with the noisy phase and overlap-added back to audio. Training
//! follows a staged schedule over three kinds of input/target pairs:
//! noisy-to-clean, clean-to-clean and noise-to-silence.
//!
//! | module       | contents                                                     |
//! |--------------|--------------------------------------------------------------|
//! | [`dsp`]      | window, STFT, magnitude/phase, overlap-add ISTFT             |
//! | [`nn`]       | splicing, TDNN layers, backprop, Adam, presets, model file   |
//! | [`enhance`]  | noisy waveform to enhanced waveform                          |
//! | [`masking`]  | ideal amplitude mask, mask application, loss                 |
//! | [`datagen`]  | synthetic corpora, SNR mixing, manifests, training pairs     |
//! | [`trainer`]  | epochs, staged schedule, validation, best-model selection    |
//! | [`metrics`]  | STOI, SDR and per-condition aggregation                      |
//! | [`bench`]    | forward-pass latency measurement                             |
//! | [`cli`]      | config parsing and the `synth/train/enhance/evaluate/bench` commands |
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod bench;
pub mod cli;
pub mod datagen;
pub mod dsp;
pub mod enhance;
pub mod error;
pub mod masking;
pub mod metrics;
pub mod nn;
pub mod trainer;
pub mod wav;

pub use error::{Error, Result};
