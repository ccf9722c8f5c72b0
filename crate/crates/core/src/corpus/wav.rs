//! RIFF/WAVE PCM16 reader and writer.
//!
//! The reader walks the chunk list, so the canonical 44-byte layout and files
//! with extra chunks (`LIST`, `fact`, ...) both load. The writer always emits
//! the canonical 44-byte header, PCM16 little-endian mono.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::SAMPLE_RATE;

/// Mono audio at a known sample rate, amplitudes in `[-1.0, 1.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, samples: Vec<f32>) -> Self {
        Self {
            sample_rate,
            samples,
        }
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed WAV header: {0}")]
    Malformed(&'static str),
    #[error("unsupported encoding: format tag {0} is not integer PCM")]
    NotPcm(u16),
    #[error("unsupported bit depth {0} (only 16-bit PCM is accepted)")]
    BitDepth(u16),
    #[error("unsupported channel count {0} (expected 1 or 2)")]
    Channels(u16),
    #[error("data chunk is empty")]
    EmptyData,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a WAV byte buffer into a mono clip at [`SAMPLE_RATE`].
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::Malformed("missing RIFF/WAVE signature"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body = at + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or(WavError::Malformed("chunk extends past end of file"))?;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::Malformed("fmt chunk shorter than 16 bytes"));
                }
                fmt = Some((
                    u16_at(bytes, body),
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                ));
            }
            b"data" => {
                data = Some(&bytes[body..end]);
                break;
            }
            _ => {}
        }
        // Chunks are word aligned.
        at = end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or(WavError::Malformed("no fmt chunk"))?;
    if format != 1 {
        return Err(WavError::NotPcm(format));
    }
    if bits != 16 {
        return Err(WavError::BitDepth(bits));
    }
    if channels != 1 && channels != 2 {
        return Err(WavError::Channels(channels));
    }
    if rate == 0 {
        return Err(WavError::Malformed("sample rate is zero"));
    }
    let data = data.ok_or(WavError::Malformed("no data chunk"))?;
    let frame_bytes = 2 * channels as usize;
    if data.len() < frame_bytes {
        return Err(WavError::EmptyData);
    }

    let samples: Vec<f32> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f32 = frame
                .chunks_exact(2)
                .map(|s| f32::from(i16::from_le_bytes([s[0], s[1]])) / 32768.0)
                .sum();
            sum / f32::from(channels)
        })
        .collect();

    let clip = AudioClip::new(rate, samples);
    Ok(if rate == SAMPLE_RATE {
        clip
    } else {
        resample_linear(&clip, SAMPLE_RATE)
    })
}

pub fn read_wav(path: &Path) -> Result<AudioClip, WavError> {
    let bytes = fs::read(path).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_wav(&bytes)
}

/// Linear-interpolation resampling.
pub fn resample_linear(clip: &AudioClip, target_rate: u32) -> AudioClip {
    let src = &clip.samples;
    if src.is_empty() || clip.sample_rate == target_rate {
        return AudioClip::new(target_rate, src.clone());
    }
    let ratio = f64::from(clip.sample_rate) / f64::from(target_rate);
    let n_out = ((src.len() as f64) / ratio).round().max(1.0) as usize;
    let last = src.len() - 1;
    let samples = (0..n_out)
        .map(|i| {
            let t = i as f64 * ratio;
            let lo = (t.floor() as usize).min(last);
            let hi = (lo + 1).min(last);
            let frac = (t - lo as f64) as f32;
            src[lo] + (src[hi] - src[lo]) * frac
        })
        .collect();
    AudioClip::new(target_rate, samples)
}

fn quantize(x: f32) -> i16 {
    (f64::from(x) * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes a clip as canonical 44-byte-header PCM16 mono.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<(), WavError> {
    fs::write(path, encode_wav(clip)).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })
}
