use std::fmt;
use std::str::FromStr;

use super::{Context, ContextSpec};
use crate::error::{Error, Result};

/// Named layerwise context configurations: four hidden layers plus the
/// output layer, which always uses the current frame only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Dnn,
    TdnnA,
    TdnnB,
    TdnnC,
    TdnnD,
    TdnnE,
    TdnnF,
}

struct Row {
    preset: Preset,
    name: &'static str,
    network: u32,
    layers: [u32; 5],
}

const TABLE: [Row; 7] = [
    Row {
        preset: Preset::Dnn,
        name: "dnn",
        network: 8,
        layers: [8, 0, 0, 0, 0],
    },
    Row {
        preset: Preset::TdnnA,
        name: "tdnn-a",
        network: 11,
        layers: [4, 3, 2, 2, 0],
    },
    Row {
        preset: Preset::TdnnB,
        name: "tdnn-b",
        network: 10,
        layers: [2, 2, 2, 4, 0],
    },
    Row {
        preset: Preset::TdnnC,
        name: "tdnn-c",
        network: 9,
        layers: [2, 1, 2, 4, 0],
    },
    Row {
        preset: Preset::TdnnD,
        name: "tdnn-d",
        network: 8,
        layers: [2, 2, 2, 2, 0],
    },
    Row {
        preset: Preset::TdnnE,
        name: "tdnn-e",
        network: 7,
        layers: [1, 2, 2, 2, 0],
    },
    Row {
        preset: Preset::TdnnF,
        name: "tdnn-f",
        network: 6,
        layers: [1, 1, 2, 2, 0],
    },
];

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Dnn,
        Preset::TdnnA,
        Preset::TdnnB,
        Preset::TdnnC,
        Preset::TdnnD,
        Preset::TdnnE,
        Preset::TdnnF,
    ];

    fn row(self) -> &'static Row {
        TABLE
            .iter()
            .find(|r| r.preset == self)
            .expect("every preset has a row")
    }

    pub fn name(self) -> &'static str {
        self.row().name
    }

    /// Tabulated whole-network context, `[-n, n]`.
    pub fn network_context(self) -> Context {
        Context::symmetric(self.row().network)
    }

    pub fn contexts(self) -> ContextSpec {
        ContextSpec::new(
            self.row()
                .layers
                .iter()
                .map(|&h| Context::symmetric(h))
                .collect(),
        )
        .expect("preset rows are non-empty")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TABLE
            .iter()
            .find(|r| r.name == s.trim().to_ascii_lowercase())
            .map(|r| r.preset)
            .ok_or_else(|| Error::invalid(format!("unknown preset `{s}`")))
    }
}
