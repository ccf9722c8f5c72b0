use super::{AudioClip, Dialect, SAMPLE_RATE, SEG_SAMPLES};

/// A fixed-length training/testing unit of exactly [`SEG_SAMPLES`] samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub speaker_id: String,
    pub dialect: Dialect,
    pub samples: Vec<f32>,
}

/// Cuts a 16 kHz clip into consecutive non-overlapping segments. The trailing
/// remainder shorter than one segment is dropped.
pub fn segment_clip(clip: &AudioClip, speaker_id: &str, dialect: Dialect) -> Vec<Segment> {
    debug_assert_eq!(clip.sample_rate, SAMPLE_RATE);
    clip.samples
        .chunks_exact(SEG_SAMPLES)
        .map(|chunk| Segment {
            speaker_id: speaker_id.to_string(),
            dialect,
            samples: chunk.to_vec(),
        })
        .collect()
}

/// Number of trailing segments of a `train` clip that are held out for
/// same-dialect evaluation: one third, rounded down.
pub fn held_out_count(n_segments: usize) -> usize {
    n_segments / 3
}
