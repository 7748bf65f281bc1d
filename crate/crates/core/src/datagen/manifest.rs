//! Tab-separated corpus manifest:
//! `id  split  clean_path  noise_path|-  snr_db|-  seen|unseen`.
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the manifest's directory.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// Whether a test noise also occurs in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseCondition {
    Seen,
    Unseen,
}

impl NoiseCondition {
    pub fn name(self) -> &'static str {
        match self {
            NoiseCondition::Seen => "seen",
            NoiseCondition::Unseen => "unseen",
        }
    }
}

impl fmt::Display for NoiseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seen" => Ok(NoiseCondition::Seen),
            "unseen" => Ok(NoiseCondition::Unseen),
            other => Err(Error::invalid(format!("unknown noise condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub clean: PathBuf,
    pub noise: Option<PathBuf>,
    pub snr_db: Option<f64>,
    pub condition: NoiseCondition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

impl CorpusManifest {
    /// Checks id uniqueness, noise/SNR pairing and split disjointness.
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut clean_split: HashMap<&Path, Split> = HashMap::new();
        let mut unseen_noises = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || e.id.contains(char::is_whitespace) {
                return Err(Error::invalid(format!("invalid utterance id `{}`", e.id)));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate utterance id `{}`", e.id)));
            }
            if e.noise.is_some() != e.snr_db.is_some() {
                return Err(Error::invalid(format!(
                    "entry `{}` must give both noise and snr or neither",
                    e.id
                )));
            }
            if let Some(prev) = clean_split.insert(&e.clean, e.split) {
                if prev != e.split {
                    return Err(Error::invalid(format!(
                        "clean file {} appears in both {prev} and {}",
                        e.clean.display(),
                        e.split
                    )));
                }
            }
            if e.condition == NoiseCondition::Unseen {
                if e.split != Split::Test {
                    return Err(Error::invalid(format!(
                        "entry `{}`: unseen noise outside the test split",
                        e.id
                    )));
                }
                if let Some(n) = &e.noise {
                    unseen_noises.insert(n.as_path());
                }
            }
        }
        for e in entries.iter().filter(|e| e.split != Split::Test) {
            if let Some(n) = &e.noise {
                if unseen_noises.contains(n.as_path()) {
                    return Err(Error::invalid(format!(
                        "unseen noise {} is used by {} entry `{}`",
                        n.display(),
                        e.split,
                        e.id
                    )));
                }
            }
        }
        Ok(CorpusManifest {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Manifest {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 6 {
                return Err(bad(format!(
                    "expected 6 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            fn optional(s: &str) -> Option<&str> {
                if s == "-" {
                    None
                } else {
                    Some(s)
                }
            }
            let snr_db = optional(fields[4])
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| bad(format!("bad snr `{s}`")))
                })
                .transpose()?;
            entries.push(ManifestEntry {
                id: fields[0].to_string(),
                split: fields[1].parse().map_err(|e: Error| bad(e.to_string()))?,
                clean: PathBuf::from(fields[2]),
                noise: optional(fields[3]).map(PathBuf::from),
                snr_db,
                condition: fields[5].parse().map_err(|e: Error| bad(e.to_string()))?,
            });
        }
        CorpusManifest::new(entries, base_dir)
    }

    /// Parse a manifest file and check that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = CorpusManifest::parse(&text, base)?;
        for e in &manifest.entries {
            for p in std::iter::once(&e.clean).chain(e.noise.as_ref()) {
                let full = manifest.resolve(p);
                if !full.is_file() {
                    return Err(Error::io(
                        full,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "referenced file not found",
                        ),
                    ));
                }
            }
        }
        Ok(manifest)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# id\tsplit\tclean\tnoise\tsnr_db\tcondition\n");
        for e in &self.entries {
            let noise = e
                .noise
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into());
            let snr = e
                .snr_db
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.id,
                e.split,
                e.clean.display(),
                noise,
                snr,
                e.condition
            ));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# comment\n\
        a\ttrain\tc/a.wav\tn/1.wav\t-5\tseen\n\
        b\tvalid\tc/b.wav\tn/1.wav\t20\tseen\n\
        \n\
        c\ttest\tc/c.wav\tn/9.wav\t0\tunseen\n\
        d\ttest\tc/d.wav\t-\t-\tseen\n";

    #[test]
    fn parse_and_serialize() {
        let m = CorpusManifest::parse(TEXT, "/data").unwrap();
        assert_eq!(m.entries().len(), 4);
        assert_eq!(m.entries()[0].snr_db, Some(-5.0));
        assert_eq!(m.entries()[3].noise, None);
        assert_eq!(m.split(Split::Test).count(), 2);
        assert_eq!(
            m.resolve(Path::new("c/a.wav")),
            PathBuf::from("/data/c/a.wav")
        );
        let again = CorpusManifest::parse(&m.to_tsv(), "/data").unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "a\ttrain\tc/a.wav\t-\t-\tseen\nb\ttrain\tc/b.wav\tn.wav\tloud\tseen\n";
        match CorpusManifest::parse(text, ".") {
            Err(Error::Manifest { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match CorpusManifest::parse("x\ttrain\tonly-three", ".") {
            Err(Error::Manifest { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            CorpusManifest::parse("x\tbogus\tc\t-\t-\tseen", "."),
            Err(Error::Manifest { line: 1, .. })
        ));
    }

    #[test]
    fn invariants_enforced() {
        let dup = "a\ttrain\tc/a.wav\t-\t-\tseen\na\ttrain\tc/b.wav\t-\t-\tseen\n";
        assert!(CorpusManifest::parse(dup, ".").is_err());
        let cross = "a\ttrain\tc/a.wav\t-\t-\tseen\nb\ttest\tc/a.wav\t-\t-\tseen\n";
        assert!(CorpusManifest::parse(cross, ".").is_err());
        let leak = "a\ttest\tc/a.wav\tn/x.wav\t0\tunseen\nb\ttrain\tc/b.wav\tn/x.wav\t0\tseen\n";
        assert!(CorpusManifest::parse(leak, ".").is_err());
        let half = "a\ttrain\tc/a.wav\tn/x.wav\t-\tseen\n";
        assert!(CorpusManifest::parse(half, ".").is_err());
    }

    #[test]
    fn load_checks_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        fs::write(&path, "a\ttrain\tmissing.wav\t-\t-\tseen\n").unwrap();
        let err = CorpusManifest::load(&path).unwrap_err();
        assert!(err.to_string().contains("missing.wav"), "{err}");
    }
}
