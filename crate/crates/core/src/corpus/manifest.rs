use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{Dialect, Split};

const COLUMNS: [&str; 4] = ["path", "speaker_id", "dialect", "split"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRecord {
    pub path: PathBuf,
    pub speaker_id: String,
    pub dialect: Dialect,
    pub split: Split,
}

/// An ordered catalogue of clips.
///
/// On disk this is a comma-delimited UTF-8 table with header
/// `path,speaker_id,dialect,split`. Lines starting with `#` before the header
/// are kept as the provenance note. Relative clip paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub records: Vec<ClipRecord>,
    pub provenance: String,
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("row {row}: missing header")]
    MissingHeader { row: usize },
    #[error("row {row}: missing column `{column}`")]
    MissingColumn { row: usize, column: &'static str },
    #[error("row {row}: unknown column `{column}`")]
    UnknownColumn { row: usize, column: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unknown dialect `{value}`")]
    BadDialect { row: usize, value: String },
    #[error("row {row}: unknown split `{value}` (expected train or test)")]
    BadSplit { row: usize, value: String },
    #[error("row {row}: empty speaker_id")]
    EmptySpeaker { row: usize },
    #[error("row {row}: duplicate path `{path}`")]
    DuplicatePath { row: usize, path: String },
}

impl Manifest {
    pub fn new(records: Vec<ClipRecord>, provenance: impl Into<String>) -> Self {
        Self {
            records,
            provenance: provenance.into(),
            root: PathBuf::new(),
        }
    }

    /// Parses manifest text. `row` numbers in errors are 1-based file lines.
    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut provenance = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (header_row, header) = loop {
            match lines.next() {
                None => return Err(ManifestError::MissingHeader { row: 1 }),
                Some((_, l)) if l.starts_with('#') => {
                    provenance.push(l.trim_start_matches('#').trim().to_string());
                }
                Some((_, l)) if l.trim().is_empty() => {}
                Some((row, l)) => break (row, l),
            }
        };

        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        if let Some(unknown) = names.iter().find(|n| !COLUMNS.contains(n)) {
            return Err(ManifestError::UnknownColumn {
                row: header_row,
                column: unknown.to_string(),
            });
        }
        let mut index = [0usize; 4];
        for (slot, column) in index.iter_mut().zip(COLUMNS) {
            *slot = names
                .iter()
                .position(|n| *n == column)
                .ok_or(ManifestError::MissingColumn {
                    row: header_row,
                    column,
                })?;
        }
        let [path_ix, speaker_ix, dialect_ix, split_ix] = index;

        let mut seen = HashSet::new();
        let mut records = Vec::new();
        for (row, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != names.len() {
                return Err(ManifestError::FieldCount {
                    row,
                    expected: names.len(),
                    found: fields.len(),
                });
            }
            let speaker_id = fields[speaker_ix];
            if speaker_id.is_empty() {
                return Err(ManifestError::EmptySpeaker { row });
            }
            let dialect = fields[dialect_ix]
                .parse::<Dialect>()
                .map_err(|_| ManifestError::BadDialect {
                    row,
                    value: fields[dialect_ix].to_string(),
                })?;
            let split = fields[split_ix]
                .parse::<Split>()
                .map_err(|value| ManifestError::BadSplit { row, value })?;
            let path = fields[path_ix];
            if !seen.insert(path.to_string()) {
                return Err(ManifestError::DuplicatePath {
                    row,
                    path: path.to_string(),
                });
            }
            records.push(ClipRecord {
                path: PathBuf::from(path),
                speaker_id: speaker_id.to_string(),
                dialect,
                split,
            });
        }

        Ok(Self {
            records,
            provenance: provenance.join("\n"),
            root: PathBuf::new(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.provenance.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.path.display(),
                r.speaker_id,
                r.dialect,
                r.split
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_text())
    }

    /// Absolute (or root-relative) location of a record's audio file.
    pub fn clip_path(&self, record: &ClipRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.root.join(&record.path)
        }
    }

    pub fn speakers(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.speaker_id.as_str()).collect()
    }

    pub fn dialects(&self) -> BTreeSet<Dialect> {
        self.records.iter().map(|r| r.dialect).collect()
    }

    /// Clip counts per (speaker, dialect, split).
    pub fn counts(&self) -> BTreeMap<(&str, Dialect, Split), usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts
                .entry((r.speaker_id.as_str(), r.dialect, r.split))
                .or_insert(0) += 1;
        }
        counts
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut manifest = Manifest::parse(&text)?;
    manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(manifest)
}
