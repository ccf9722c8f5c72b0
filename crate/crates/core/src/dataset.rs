//! Manifest → per-segment features, in memory or through the on-disk cache.
//!
//! Every segment gets three representations: the raw `12 x 500` MFCC image,
//! the 24-dim statistics vector and a 64-token histogram. Values are stored
//! as `f32` in both paths, so a corpus loaded from the cache is identical to
//! one computed in memory.
//!
//! Segments of `test` clips are held out. For `train` clips the trailing
//! third of segments is held out for same-dialect evaluation and the rest is
//! used for fitting.

use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{held_out_count, read_wav, segment_clip, Dialect, Manifest, Split};
use crate::features::{
    build_mel_filterbank, cache, fit_codebook, mfcc, raw_image, stats_vector, stft_power,
    token_histogram, Codebook, FrameParams, MelFilterbank, MfccMatrix, CODEBOOK_SIZE, N_MELS,
    N_MFCC, STATS_DIM,
};

/// Upper bound on frames used to fit the codebook.
pub const MAX_CODEBOOK_FRAMES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Portion {
    Fit,
    HeldOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    /// Index into [`FeaturizedCorpus::speakers`].
    pub speaker: usize,
    pub dialect: Dialect,
    pub portion: Portion,
    /// Unnormalised MFCC image, `12 x 500` row-major.
    pub image: Vec<f32>,
    pub stats: Vec<f32>,
    pub hist: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeaturizedCorpus {
    /// Sorted speaker ids; class `i` is `speakers[i]`.
    pub speakers: Vec<String>,
    pub records: Vec<FeatureRecord>,
}

impl FeaturizedCorpus {
    pub fn n_classes(&self) -> usize {
        self.speakers.len()
    }

    pub fn select(&self, dialect: Dialect, portion: Portion) -> impl Iterator<Item = &FeatureRecord> {
        self.records
            .iter()
            .filter(move |r| r.dialect == dialect && r.portion == portion)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSummary {
    pub clips: usize,
    pub segments: usize,
    pub files_written: usize,
    pub files_skipped: usize,
    /// Clips that could not be processed, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cache I/O at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("codebook: {0}")]
    Codebook(#[from] crate::features::CodebookError),
    #[error("cache entry {0} is missing; run feature extraction first")]
    Missing(PathBuf),
}

fn cache_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Cache {
        path: path.to_path_buf(),
        source,
    }
}

/// Image and statistics for one segment, before quantisation.
#[derive(Debug, Clone, PartialEq)]
struct SegmentFeatures {
    image: Vec<f32>,
    stats: Vec<f32>,
}

struct Extractor {
    params: FrameParams,
    bank: MelFilterbank,
}

impl Extractor {
    fn new() -> Self {
        let params = FrameParams::default();
        let bank = build_mel_filterbank(&params, N_MELS);
        Self { params, bank }
    }

    fn clip(&self, path: &Path, speaker: &str, dialect: Dialect) -> Result<Vec<SegmentFeatures>, String> {
        let clip = read_wav(path).map_err(|e| e.to_string())?;
        segment_clip(&clip, speaker, dialect)
            .iter()
            .map(|seg| {
                let spec = stft_power(&seg.samples, &self.params).map_err(|e| e.to_string())?;
                let m = mfcc(&spec, &self.bank);
                let stats = stats_vector(&m).map_err(|e| e.to_string())?;
                Ok(SegmentFeatures {
                    image: raw_image(&m),
                    stats: stats.values.iter().map(|&v| v as f32).collect(),
                })
            })
            .collect()
    }
}

/// Frames of a raw image as an `MfccMatrix` (values widened from `f32`).
fn image_frames(image: &[f32]) -> MfccMatrix {
    let n_frames = image.len() / N_MFCC;
    let mut coeffs = vec![0.0; image.len()];
    for i in 0..N_MFCC {
        for t in 0..n_frames {
            coeffs[t * N_MFCC + i] = f64::from(image[i * n_frames + t]);
        }
    }
    MfccMatrix { n_frames, coeffs }
}

fn portions(split: Split, n: usize) -> impl Iterator<Item = Portion> {
    let fit = match split {
        Split::Test => 0,
        Split::Train => n - held_out_count(n),
    };
    (0..n).map(move |i| if i < fit { Portion::Fit } else { Portion::HeldOut })
}

/// Fits the codebook on an evenly strided subset of fit-portion frames.
fn codebook_from<'a>(fit_images: impl Iterator<Item = &'a [f32]>, seed: u64) -> Result<Codebook, DatasetError> {
    let images: Vec<&[f32]> = fit_images.collect();
    let total: usize = images.iter().map(|i| i.len() / N_MFCC).sum();
    let stride = total.div_ceil(MAX_CODEBOOK_FRAMES).max(1);
    let mut frames = Vec::new();
    let mut index = 0usize;
    for img in images {
        let m = image_frames(img);
        for frame in m.frames() {
            if index % stride == 0 {
                frames.extend_from_slice(frame);
            }
            index += 1;
        }
    }
    Ok(fit_codebook(&frames, N_MFCC, CODEBOOK_SIZE, seed)?)
}

fn hist_of(image: &[f32], cb: &Codebook) -> Vec<u32> {
    token_histogram(&image_frames(image), cb).counts
}

fn speakers_of(manifest: &Manifest) -> Vec<String> {
    manifest.speakers().into_iter().map(str::to_string).collect()
}

fn assemble(
    manifest: &Manifest,
    speakers: &[String],
    clips: Vec<(usize, Vec<SegmentFeatures>)>,
    cb: &Codebook,
) -> FeaturizedCorpus {
    let mut records = Vec::new();
    for (ix, segs) in clips {
        let r = &manifest.records[ix];
        let speaker = speakers.binary_search(&r.speaker_id).expect("speaker listed");
        let n = segs.len();
        for (seg, portion) in segs.into_iter().zip(portions(r.split, n)) {
            let hist = hist_of(&seg.image, cb);
            records.push(FeatureRecord {
                speaker,
                dialect: r.dialect,
                portion,
                image: seg.image,
                stats: seg.stats,
                hist,
            });
        }
    }
    FeaturizedCorpus {
        speakers: speakers.to_vec(),
        records,
    }
}

fn fit_images<'a>(
    manifest: &'a Manifest,
    clips: &'a [(usize, Vec<SegmentFeatures>)],
) -> impl Iterator<Item = &'a [f32]> + 'a {
    clips.iter().flat_map(move |(ix, segs)| {
        let split = manifest.records[*ix].split;
        segs.iter()
            .zip(portions(split, segs.len()))
            .filter(|(_, p)| *p == Portion::Fit)
            .map(|(s, _)| s.image.as_slice())
    })
}

/// Computes every representation in memory. Unreadable clips are reported in
/// the returned summary and skipped.
pub fn featurize(manifest: &Manifest, seed: u64) -> Result<(FeaturizedCorpus, FeatureSummary), DatasetError> {
    let ex = Extractor::new();
    let speakers = speakers_of(manifest);
    let results: Vec<Result<Vec<SegmentFeatures>, String>> = manifest
        .records
        .par_iter()
        .map(|r| ex.clip(&manifest.clip_path(r), &r.speaker_id, r.dialect))
        .collect();

    let mut summary = FeatureSummary {
        clips: manifest.records.len(),
        ..Default::default()
    };
    let mut clips = Vec::new();
    for (ix, result) in results.into_iter().enumerate() {
        match result {
            Ok(segs) => {
                summary.segments += segs.len();
                clips.push((ix, segs));
            }
            Err(e) => summary
                .failures
                .push((manifest.clip_path(&manifest.records[ix]), e)),
        }
    }
    if summary.segments == 0 {
        return Ok((
            FeaturizedCorpus {
                speakers,
                records: Vec::new(),
            },
            summary,
        ));
    }
    let cb = codebook_from(fit_images(manifest, &clips), seed)?;
    Ok((assemble(manifest, &speakers, clips, &cb), summary))
}

/// Cache directory for one clip: the record path, extension dropped, under
/// `cache_root`.
pub fn clip_cache_dir(cache_root: &Path, record_path: &Path) -> PathBuf {
    let mut dir = cache_root.to_path_buf();
    let stem = record_path.with_extension("");
    for c in stem.components() {
        if let Component::Normal(part) = c {
            dir.push(part);
        }
    }
    dir
}

fn segment_file(dir: &Path, index: usize, repr: &str) -> PathBuf {
    dir.join(format!("{index:05}.{repr}.didf"))
}

fn source_fingerprint(path: &Path) -> io::Result<String> {
    let meta = fs::metadata(path)?;
    let mtime = meta
        .modified()?
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    Ok(format!(
        "len={} mtime={}.{:09}",
        meta.len(),
        mtime.as_secs(),
        mtime.subsec_nanos()
    ))
}

/// Segment count recorded for a clip whose cache matches its source.
fn fresh_segments(dir: &Path, source: &Path) -> Option<usize> {
    let stored = fs::read_to_string(dir.join("fingerprint")).ok()?;
    let (fp, count) = stored.trim_end().rsplit_once(" segments=")?;
    (fp == source_fingerprint(source).ok()?).then(|| count.parse().ok())?
}

enum ClipOutcome {
    Fresh(usize),
    Written(usize),
}

fn refresh_clip(ex: &Extractor, manifest: &Manifest, ix: usize, cache_root: &Path) -> Result<ClipOutcome, String> {
    let r = &manifest.records[ix];
    let source = manifest.clip_path(r);
    let dir = clip_cache_dir(cache_root, &r.path);
    if let Some(n) = fresh_segments(&dir, &source) {
        return Ok(ClipOutcome::Fresh(n));
    }
    let fp = source_fingerprint(&source).map_err(|e| format!("{}: {e}", source.display()))?;
    let segs = ex.clip(&source, &r.speaker_id, r.dialect)?;
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| e.to_string())?;
    }
    for (i, seg) in segs.iter().enumerate() {
        cache::write(&segment_file(&dir, i, "image"), &[N_MFCC, seg.image.len() / N_MFCC], &seg.image)
            .and_then(|_| cache::write(&segment_file(&dir, i, "stats"), &[STATS_DIM], &seg.stats))
            .map_err(|e| e.to_string())?;
    }
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    // Written last: a clip is only fresh once all of its segments are on disk.
    fs::write(dir.join("fingerprint"), format!("{fp} segments={}\n", segs.len()))
        .map_err(|e| e.to_string())?;
    Ok(ClipOutcome::Written(segs.len()))
}

fn read_cached(path: &Path) -> Result<cache::CachedArray, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::Missing(path.to_path_buf()));
    }
    cache::read(path).map_err(cache_err(path))
}

fn load_clip_images(dir: &Path, n: usize) -> Result<Vec<SegmentFeatures>, DatasetError> {
    (0..n)
        .map(|i| {
            Ok(SegmentFeatures {
                image: read_cached(&segment_file(dir, i, "image"))?.values,
                stats: read_cached(&segment_file(dir, i, "stats"))?.values,
            })
        })
        .collect()
}

/// Brings the cache in line with the manifest. Clips whose source size and
/// modification time are unchanged are skipped; histogram files are only
/// rewritten when the codebook changes or they are missing.
pub fn populate_cache(manifest: &Manifest, cache_root: &Path, seed: u64) -> Result<FeatureSummary, DatasetError> {
    fs::create_dir_all(cache_root).map_err(cache_err(cache_root))?;
    let ex = Extractor::new();
    let outcomes: Vec<Result<ClipOutcome, String>> = (0..manifest.records.len())
        .into_par_iter()
        .map(|ix| refresh_clip(&ex, manifest, ix, cache_root))
        .collect();

    let mut summary = FeatureSummary {
        clips: manifest.records.len(),
        ..Default::default()
    };
    let mut clips = Vec::new();
    for (ix, outcome) in outcomes.into_iter().enumerate() {
        let n = match outcome {
            Ok(ClipOutcome::Fresh(n)) => {
                summary.files_skipped += 2 * n;
                n
            }
            Ok(ClipOutcome::Written(n)) => {
                summary.files_written += 2 * n;
                n
            }
            Err(e) => {
                summary
                    .failures
                    .push((manifest.clip_path(&manifest.records[ix]), e));
                continue;
            }
        };
        summary.segments += n;
        let dir = clip_cache_dir(cache_root, &manifest.records[ix].path);
        clips.push((ix, load_clip_images(&dir, n)?));
    }
    if summary.segments == 0 {
        return Ok(summary);
    }

    let cb = codebook_from(fit_images(manifest, &clips), seed)?;
    let cb_values: Vec<f32> = cb.centroids.iter().map(|&v| v as f32).collect();
    let cb_bytes = cache::encode(&[cb.k, cb.dim], &cb_values);
    let cb_path = cache_root.join("codebook.didf");
    let cb_changed = fs::read(&cb_path).ok().as_deref() != Some(cb_bytes.as_slice());
    if cb_changed {
        fs::write(&cb_path, &cb_bytes).map_err(cache_err(&cb_path))?;
        summary.files_written += 1;
    } else {
        summary.files_skipped += 1;
    }

    for (ix, segs) in &clips {
        let dir = clip_cache_dir(cache_root, &manifest.records[*ix].path);
        for (i, seg) in segs.iter().enumerate() {
            let path = segment_file(&dir, i, "hist");
            if !cb_changed && path.exists() {
                summary.files_skipped += 1;
                continue;
            }
            let hist: Vec<f32> = hist_of(&seg.image, &cb).iter().map(|&c| c as f32).collect();
            cache::write(&path, &[CODEBOOK_SIZE], &hist).map_err(cache_err(&path))?;
            summary.files_written += 1;
        }
    }
    Ok(summary)
}

/// Loads a populated cache. Clips without a fresh cache entry are reported
/// as failures.
pub fn load_cached(manifest: &Manifest, cache_root: &Path) -> Result<(FeaturizedCorpus, Vec<(PathBuf, String)>), DatasetError> {
    let speakers = speakers_of(manifest);
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for r in &manifest.records {
        let dir = clip_cache_dir(cache_root, &r.path);
        let Some(n) = fresh_segments(&dir, &manifest.clip_path(r)) else {
            failures.push((manifest.clip_path(r), "no up-to-date cache entry".to_string()));
            continue;
        };
        let speaker = speakers.binary_search(&r.speaker_id).expect("speaker listed");
        let segs = load_clip_images(&dir, n)?;
        for (i, (seg, portion)) in segs.into_iter().zip(portions(r.split, n)).enumerate() {
            let hist = read_cached(&segment_file(&dir, i, "hist"))?
                .values
                .iter()
                .map(|&c| c as u32)
                .collect();
            records.push(FeatureRecord {
                speaker,
                dialect: r.dialect,
                portion,
                image: seg.image,
                stats: seg.stats,
                hist,
            });
        }
    }
    Ok((FeaturizedCorpus { speakers, records }, failures))
}

/// Segments a clip of `n_samples` contributes to a corpus.
pub fn expected_segments(n_samples: usize) -> usize {
    n_samples / crate::corpus::SEG_SAMPLES
}
