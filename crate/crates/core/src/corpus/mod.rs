//! Audio ingestion and dataset cataloguing.

mod manifest;
mod segment;
mod stats;
pub mod synth;
pub mod wav;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use manifest::{load_manifest, ClipRecord, Manifest, ManifestError};
pub use segment::{held_out_count, segment_clip, Segment};
pub use stats::{corpus_stats, format_duration, CorpusStats, StatsError};
pub use synth::{synth_corpus, DialectVoice, SpeakerVoice, SynthError, SynthSpec};
pub use wav::{read_wav, write_wav, AudioClip, WavError};

/// Pipeline sample rate; every clip is brought to this rate on ingestion.
pub const SAMPLE_RATE: u32 = 16_000;

/// Samples per segment. With a 400-sample window and 160-sample hop this is
/// exactly 500 analysis frames.
pub const SEG_SAMPLES: usize = 80_240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dialect {
    Sorani,
    Kurmanji,
    Hawrami,
}

impl Dialect {
    pub const ALL: [Dialect; 3] = [Dialect::Sorani, Dialect::Kurmanji, Dialect::Hawrami];

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Sorani => "Sorani",
            Dialect::Kurmanji => "Kurmanji",
            Dialect::Hawrami => "Hawrami",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dialect `{0}` (expected Sorani, Kurmanji or Hawrami)")]
pub struct UnknownDialect(pub String);

impl FromStr for Dialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dialect::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownDialect(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dialect_names_round_trip() {
        for d in Dialect::ALL {
            assert_eq!(d.as_str().parse::<Dialect>().unwrap(), d);
        }
        assert_eq!("sorani".parse::<Dialect>().unwrap(), Dialect::Sorani);
        assert!("Zazaki".parse::<Dialect>().is_err());
    }
}
