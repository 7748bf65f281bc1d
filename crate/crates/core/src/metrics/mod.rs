//! Objective quality measures and per-condition score tables.

mod aggregate;
mod resample;
mod sdr;
mod stoi;

pub use aggregate::{aggregate, scores_to_tsv, summary_to_tsv, GroupMean, Grouping, ScoreRow};
pub use resample::{resample, RESAMPLE_TAPS};
pub use sdr::{sdr, SDR_CAP_DB};
pub use stoi::stoi;
