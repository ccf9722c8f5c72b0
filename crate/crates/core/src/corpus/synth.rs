//! Deterministic synthetic speaker corpus.
//!
//! Each (speaker, dialect) pair becomes one PCM16 clip: a glottal pulse train
//! at the speaker's F0 with ±2 % period jitter, filtered by three parallel
//! two-pole resonators at the speaker's formants scaled by the dialect's
//! multipliers, plus white noise. Every clip draws from its own stream keyed
//! by `(seed, speaker, dialect)`, so generation order does not affect bytes.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wav::{encode_wav, AudioClip};
use super::{ClipRecord, Dialect, Manifest, Split, SAMPLE_RATE};
use crate::seed;

const PEAK_LEVEL: f64 = 0.6;
const JITTER: f64 = 0.02;
const FORMANT_LEVELS: [f64; 3] = [1.0, 0.6, 0.35];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerVoice {
    pub id: String,
    /// Fundamental frequency in Hz.
    pub f0: f64,
    /// F1, F2, F3 centre frequencies in Hz.
    pub formants: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectVoice {
    pub dialect: Dialect,
    /// Multipliers applied to F1..F3.
    pub formant_scale: [f64; 3],
    /// Spectral tilt change in dB per octave, relative to 500 Hz.
    pub tilt_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationOverride {
    pub speaker: String,
    pub dialect: Dialect,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub speakers: Vec<SpeakerVoice>,
    pub dialects: Vec<DialectVoice>,
    /// Default clip length for every (speaker, dialect) pair.
    pub clip_seconds: f64,
    #[serde(default)]
    pub durations: Vec<DurationOverride>,
    /// Peak amplitude of the additive uniform white noise.
    pub noise_amplitude: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("duplicate speaker id `{0}`")]
    DuplicateSpeaker(String),
    #[error("invalid synth spec: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl SynthSpec {
    /// Thirteen speakers across the three dialects, with Hawrami shifted
    /// further from Sorani than Kurmanji is.
    pub fn reference(clip_seconds: f64) -> Self {
        #[rustfmt::skip]
        let table: [(&str, f64, [f64; 3]); 13] = [
            ("spk01", 100.0, [300.0, 870.0, 2240.0]),
            ("spk02", 108.0, [530.0, 1840.0, 2480.0]),
            ("spk03", 116.0, [660.0, 1720.0, 2410.0]),
            ("spk04", 124.0, [730.0, 1090.0, 2440.0]),
            ("spk05", 132.0, [570.0, 840.0, 2410.0]),
            ("spk06", 142.0, [440.0, 1020.0, 2240.0]),
            ("spk07", 152.0, [390.0, 1990.0, 2550.0]),
            ("spk08", 176.0, [310.0, 2790.0, 3310.0]),
            ("spk09", 190.0, [610.0, 2330.0, 2990.0]),
            ("spk10", 204.0, [860.0, 2050.0, 2850.0]),
            ("spk11", 218.0, [850.0, 1220.0, 2810.0]),
            ("spk12", 232.0, [590.0, 920.0, 2710.0]),
            ("spk13", 246.0, [470.0, 1160.0, 2680.0]),
        ];
        Self {
            speakers: table
                .iter()
                .map(|&(id, f0, formants)| SpeakerVoice {
                    id: id.to_string(),
                    f0,
                    formants,
                })
                .collect(),
            dialects: vec![
                DialectVoice {
                    dialect: Dialect::Sorani,
                    formant_scale: [1.0, 1.0, 1.0],
                    tilt_db: 0.0,
                },
                DialectVoice {
                    dialect: Dialect::Kurmanji,
                    formant_scale: [1.10, 0.92, 1.06],
                    tilt_db: -3.0,
                },
                DialectVoice {
                    dialect: Dialect::Hawrami,
                    formant_scale: [0.84, 1.16, 0.91],
                    tilt_db: 4.0,
                },
            ],
            clip_seconds,
            durations: Vec::new(),
            noise_amplitude: 0.01,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let mut ids = HashSet::new();
        for s in &self.speakers {
            if !ids.insert(s.id.as_str()) {
                return Err(SynthError::DuplicateSpeaker(s.id.clone()));
            }
            if s.id.is_empty()
                || !s
                    .id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(SynthError::Invalid(format!(
                    "speaker id `{}` must be non-empty [A-Za-z0-9_-]",
                    s.id
                )));
            }
            if !(s.f0 > 0.0) {
                return Err(SynthError::Invalid(format!("speaker {}: f0 must be positive", s.id)));
            }
        }
        let nyquist = f64::from(SAMPLE_RATE) / 2.0;
        for d in &self.dialects {
            for s in &self.speakers {
                for (f, m) in s.formants.iter().zip(d.formant_scale) {
                    let shifted = f * m;
                    if !(shifted > 0.0 && shifted < nyquist) {
                        return Err(SynthError::Invalid(format!(
                            "speaker {} in {}: formant {shifted} Hz outside (0, {nyquist})",
                            s.id, d.dialect
                        )));
                    }
                }
            }
        }
        let mut dialects = HashSet::new();
        if let Some(d) = self.dialects.iter().find(|d| !dialects.insert(d.dialect)) {
            return Err(SynthError::Invalid(format!("dialect {} listed twice", d.dialect)));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(SynthError::Invalid("noise_amplitude must be >= 0".into()));
        }
        Ok(())
    }

    pub fn seconds_for(&self, speaker: &str, dialect: Dialect) -> f64 {
        self.durations
            .iter()
            .find(|o| o.speaker == speaker && o.dialect == dialect)
            .map_or(self.clip_seconds, |o| o.seconds)
    }
}

struct Resonator {
    gain: f64,
    b1: f64,
    b2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, level: f64) -> Self {
        let sr = f64::from(SAMPLE_RATE);
        let r = (-PI * bandwidth / sr).exp();
        let theta = 2.0 * PI * freq / sr;
        // Scales the pole pair to roughly unit gain at its peak.
        let norm = (1.0 - r) * (1.0 - 2.0 * r * (2.0 * theta).cos() + r * r).sqrt();
        Self {
            gain: level * norm,
            b1: 2.0 * r * theta.cos(),
            b2: -r * r,
        }
    }

    fn run(&self, input: &[f64], out: &mut [f64]) {
        let (mut y1, mut y2) = (0.0, 0.0);
        for (x, o) in input.iter().zip(out.iter_mut()) {
            let y = self.gain * x + self.b1 * y1 + self.b2 * y2;
            y2 = y1;
            y1 = y;
            *o += y;
        }
    }
}

/// Renders one clip; pure in `(speaker, dialect, seconds, noise, seed)`.
pub fn render_clip(
    speaker: &SpeakerVoice,
    dialect: &DialectVoice,
    seconds: f64,
    noise_amplitude: f64,
    seed: u64,
) -> AudioClip {
    let sr = f64::from(SAMPLE_RATE);
    let n = (seconds * sr).round().max(0.0) as usize;
    let d = dialect.dialect.as_str();

    let mut source_rng = seed::rng(seed, &[&speaker.id, d, "source"]);
    let mut source = vec![0.0; n];
    let base_period = sr / speaker.f0;
    let mut pos = source_rng.gen_range(0.0..base_period);
    while (pos.round() as usize) < n {
        source[pos.round() as usize] = 1.0;
        let jitter = source_rng.gen_range(-JITTER..=JITTER);
        pos += sr / (speaker.f0 * (1.0 + jitter));
    }

    let mut voiced = vec![0.0; n];
    for (i, (&f, &scale)) in speaker
        .formants
        .iter()
        .zip(dialect.formant_scale.iter())
        .enumerate()
    {
        let freq = f * scale;
        let tilt = 10f64.powf(dialect.tilt_db * (freq / 500.0).log2() / 20.0);
        let bandwidth = 60.0 + 0.04 * freq;
        Resonator::new(freq, bandwidth, FORMANT_LEVELS[i] * tilt).run(&source, &mut voiced);
    }

    let peak = voiced.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { PEAK_LEVEL / peak } else { 0.0 };
    let mut noise_rng = seed::rng(seed, &[&speaker.id, d, "noise"]);
    let samples = voiced
        .iter()
        .map(|v| {
            let noise = if noise_amplitude > 0.0 {
                noise_rng.gen_range(-noise_amplitude..=noise_amplitude)
            } else {
                0.0
            };
            (v * scale + noise).clamp(-1.0, 1.0) as f32
        })
        .collect();
    AudioClip::new(SAMPLE_RATE, samples)
}

/// File name used for a (speaker, dialect) clip.
pub fn clip_file_name(speaker: &str, dialect: Dialect) -> String {
    format!("{speaker}_{dialect}.wav")
}

/// Writes one WAV per (speaker, dialect) plus `manifest.csv` into `out_dir`.
/// All clips carry split `train`; same-dialect evaluation uses the held-out
/// tail of each clip.
pub fn synth_corpus(spec: &SynthSpec, seed: u64, out_dir: &Path) -> Result<Manifest, SynthError> {
    spec.validate()?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let jobs: Vec<(&SpeakerVoice, &DialectVoice)> = spec
        .speakers
        .iter()
        .flat_map(|s| spec.dialects.iter().map(move |d| (s, d)))
        .collect();

    let records = jobs
        .par_iter()
        .map(|&(speaker, dialect)| {
            let seconds = spec.seconds_for(&speaker.id, dialect.dialect);
            let clip = render_clip(speaker, dialect, seconds, spec.noise_amplitude, seed);
            let name = clip_file_name(&speaker.id, dialect.dialect);
            let path = out_dir.join(&name);
            fs::write(&path, encode_wav(&clip)).map_err(io_err(&path))?;
            Ok(ClipRecord {
                path: PathBuf::from(name),
                speaker_id: speaker.id.clone(),
                dialect: dialect.dialect,
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>, SynthError>>()?;

    let mut manifest = Manifest::new(
        records,
        format!(
            "synthetic corpus: {} speakers x {} dialects, seed {seed}",
            spec.speakers.len(),
            spec.dialects.len()
        ),
    );
    let manifest_path = out_dir.join("manifest.csv");
    manifest.write(&manifest_path).map_err(io_err(&manifest_path))?;
    manifest.root = out_dir.to_path_buf();
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_wav;

    fn small_spec() -> SynthSpec {
        let mut spec = SynthSpec::reference(0.5);
        spec.speakers.truncate(2);
        spec
    }

    #[test]
    fn deterministic_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = small_spec();
        synth_corpus(&spec, 42, a.path()).unwrap();
        synth_corpus(&spec, 42, b.path()).unwrap();
        for name in ["manifest.csv", "spk01_Sorani.wav", "spk02_Hawrami.wav"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        let c = tempfile::tempdir().unwrap();
        synth_corpus(&spec, 43, c.path()).unwrap();
        assert_ne!(
            fs::read(a.path().join("spk01_Sorani.wav")).unwrap(),
            fs::read(c.path().join("spk01_Sorani.wav")).unwrap()
        );
    }

    #[test]
    fn reference_manifest_has_39_records() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_corpus(&SynthSpec::reference(0.1), 1, dir.path()).unwrap();
        assert_eq!(manifest.records.len(), 39);
        let reloaded = crate::corpus::load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(reloaded.records, manifest.records);
        let clip = read_wav(&reloaded.clip_path(&reloaded.records[0])).unwrap();
        assert_eq!(clip.samples.len(), 1600);
    }

    #[test]
    fn duration_overrides() {
        let mut spec = small_spec();
        spec.durations.push(DurationOverride {
            speaker: "spk02".into(),
            dialect: Dialect::Kurmanji,
            seconds: 0.25,
        });
        assert_eq!(spec.seconds_for("spk02", Dialect::Kurmanji), 0.25);
        assert_eq!(spec.seconds_for("spk02", Dialect::Sorani), 0.5);
    }

    #[test]
    fn rejects_duplicate_speakers() {
        let mut spec = small_spec();
        spec.speakers[1].id = spec.speakers[0].id.clone();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            synth_corpus(&spec, 0, dir.path()),
            Err(SynthError::DuplicateSpeaker(_))
        ));
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(
            synth_corpus(&small_spec(), 0, &file.join("sub")),
            Err(SynthError::Io { .. })
        ));
    }
}
