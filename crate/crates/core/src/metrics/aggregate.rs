use std::fmt;
use std::str::FromStr;

use crate::datagen::NoiseCondition;
use crate::error::{Error, Result};

/// Scores of one enhanced utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub id: String,
    pub snr_db: Option<f64>,
    pub condition: NoiseCondition,
    pub stoi: f64,
    pub sdr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    BySnr,
    BySeenUnseen,
    Overall,
}

impl Grouping {
    pub const ALL: [Grouping; 3] = [Grouping::BySnr, Grouping::BySeenUnseen, Grouping::Overall];

    pub fn name(self) -> &'static str {
        match self {
            Grouping::BySnr => "by_snr",
            Grouping::BySeenUnseen => "by_seen_unseen",
            Grouping::Overall => "overall",
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Grouping::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown grouping `{s}`")))
    }
}

/// Mean scores of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMean {
    pub key: String,
    pub stoi: f64,
    pub sdr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Key {
    Snr(f64),
    NoSnr,
    Condition(NoiseCondition),
    All,
}

impl Key {
    fn of(row: &ScoreRow, grouping: Grouping) -> Key {
        match grouping {
            Grouping::BySnr => row.snr_db.map_or(Key::NoSnr, Key::Snr),
            Grouping::BySeenUnseen => Key::Condition(row.condition),
            Grouping::Overall => Key::All,
        }
    }

    fn label(self) -> String {
        match self {
            Key::Snr(s) => s.to_string(),
            Key::NoSnr => "-".into(),
            Key::Condition(c) => c.to_string(),
            Key::All => "all".into(),
        }
    }
}

/// Sum in sorted order so the result does not depend on row order.
fn order_free_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-group arithmetic means, groups sorted by key.
pub fn aggregate(rows: &[ScoreRow], grouping: Grouping) -> Result<Vec<GroupMean>> {
    if rows.is_empty() {
        return Err(Error::invalid("no score rows to aggregate"));
    }
    let mut keys: Vec<Key> = rows.iter().map(|r| Key::of(r, grouping)).collect();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    keys.dedup();
    Ok(keys
        .into_iter()
        .map(|key| {
            let members: Vec<&ScoreRow> = rows
                .iter()
                .filter(|r| Key::of(r, grouping) == key)
                .collect();
            GroupMean {
                key: key.label(),
                stoi: order_free_mean(members.iter().map(|r| r.stoi).collect()),
                sdr: order_free_mean(members.iter().map(|r| r.sdr).collect()),
                count: members.len(),
            }
        })
        .collect())
}

/// Per-utterance scores as tab-separated text with a header row.
pub fn scores_to_tsv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("id\tsnr_db\tcondition\tstoi\tsdr\n");
    for r in rows {
        let snr = r.snr_db.map_or_else(|| "-".to_string(), |s| s.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.id, snr, r.condition, r.stoi, r.sdr
        ));
    }
    out
}

/// Aggregate tables for every grouping, preceded by metric notes.
pub fn summary_to_tsv(rows: &[ScoreRow]) -> Result<String> {
    let mut out =
        String::from("# sdr:plain\n# pesq: unsupported\ngrouping\tkey\tstoi\tsdr\tcount\n");
    for g in Grouping::ALL {
        for m in aggregate(rows, g)? {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                g, m.key, m.stoi, m.sdr, m.count
            ));
        }
    }
    Ok(out)
}
