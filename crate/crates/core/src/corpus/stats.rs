use std::fmt;
use std::path::PathBuf;

use super::{read_wav, Manifest, WavError};

/// Duration statistics over a set of clips, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub total_duration: f64,
    pub longest: f64,
    pub shortest: f64,
    pub mean: f64,
    pub file_count: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("empty corpus")]
    Empty,
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: WavError,
    },
}

impl CorpusStats {
    pub fn from_durations(durations: &[f64]) -> Result<Self, StatsError> {
        if durations.is_empty() {
            return Err(StatsError::Empty);
        }
        let total: f64 = durations.iter().sum();
        Ok(Self {
            total_duration: total,
            longest: durations.iter().copied().fold(f64::MIN, f64::max),
            shortest: durations.iter().copied().fold(f64::MAX, f64::min),
            mean: total / durations.len() as f64,
            file_count: durations.len(),
        })
    }
}

/// "1 Hours 5 Minutes and 2.9 Seconds" style rendering used in the corpus
/// summary table.
pub fn format_duration(secs: f64) -> String {
    let hours = (secs / 3600.0).floor();
    let minutes = ((secs - hours * 3600.0) / 60.0).floor();
    let rest = secs - hours * 3600.0 - minutes * 60.0;
    let mut parts = Vec::new();
    if hours > 0.0 {
        parts.push(format!("{hours} Hours"));
    }
    if minutes > 0.0 {
        parts.push(format!("{minutes} Minutes"));
    }
    let rest = format!("{:.1}", rest);
    let rest = rest.strip_suffix(".0").unwrap_or(&rest);
    if parts.is_empty() {
        format!("{rest} Seconds")
    } else {
        format!("{} and {rest} Seconds", parts.join(" "))
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Total Audio Length\t{}", format_duration(self.total_duration))?;
        writeln!(f, "Longest Audio Length\t{}", format_duration(self.longest))?;
        writeln!(f, "Shortest Audio Length\t{}", format_duration(self.shortest))?;
        writeln!(f, "Average Audio Length\t{}", format_duration(self.mean))?;
        write!(f, "Number of Files\t{}", self.file_count)
    }
}

pub fn corpus_stats(manifest: &Manifest) -> Result<CorpusStats, StatsError> {
    let durations = manifest
        .records
        .iter()
        .map(|r| {
            let path = manifest.clip_path(r);
            read_wav(&path)
                .map(|c| c.duration_secs())
                .map_err(|source| StatsError::Read { path, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    CorpusStats::from_durations(&durations)
}
