//! Manifests, synthetic fixture corpora and the on-disk feature cache.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::{decode_wav, mfcc, mirror_pad, read_feature_file, resample, write_feature_file, write_wav, AudioClip, MfccConfig};
use crate::error::{Error, Result};
use crate::models::EmotionLabel;
use crate::tensor::Tensor;
use crate::train::{Dataset, Example};

pub const CACHE_ENV: &str = "DYNSER_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Relative to the manifest root.
    pub path: PathBuf,
    pub label: EmotionLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct ManifestRow {
    path: String,
    label: String,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Clip count per label id.
    pub fn histogram(&self) -> [usize; 5] {
        let mut h = [0; 5];
        for e in &self.entries {
            h[e.label.id()] += 1;
        }
        h
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["path", "label"])?;
        for e in &self.entries {
            w.write_record([e.path.to_string_lossy().as_ref(), e.label.name()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a `path,label` CSV. `root` defaults to the manifest's directory.
pub fn load_manifest(path: &Path, root: Option<&Path>) -> Result<DatasetManifest> {
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label"] {
        return Err(Error::Data(format!(
            "{}: header must be \"path,label\", got {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
        // Row 1 is the header.
        let line = i + 2;
        let row = row?;
        let label: EmotionLabel = row.label.parse().map_err(|_| {
            Error::Label(format!("{} row {line}: unknown label {:?}", path.display(), row.label))
        })?;
        if !seen.insert(row.path.clone()) {
            return Err(Error::Data(format!("{} row {line}: duplicate path {}", path.display(), row.path)));
        }
        entries.push(ManifestEntry { path: PathBuf::from(row.path), label });
    }
    if entries.is_empty() {
        return Err(Error::Data(format!("{}: manifest has no rows", path.display())));
    }
    let root = match root {
        Some(r) => r.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    Ok(DatasetManifest { root, entries })
}

/// Parametric signal family per class: fundamental band, AM rate, noise.
#[derive(Clone, Copy, Debug)]
pub struct Family {
    pub f0_hz: f64,
    pub am_hz: f64,
    pub noise: f64,
}

pub fn fixture_family(label: EmotionLabel) -> Family {
    match label {
        EmotionLabel::Anger => Family { f0_hz: 700.0, am_hz: 7.0, noise: 0.03 },
        EmotionLabel::Happiness => Family { f0_hz: 1000.0, am_hz: 5.0, noise: 0.02 },
        EmotionLabel::Sadness => Family { f0_hz: 180.0, am_hz: 1.5, noise: 0.005 },
        EmotionLabel::Fear => Family { f0_hz: 1400.0, am_hz: 10.0, noise: 0.04 },
        EmotionLabel::Neutral => Family { f0_hz: 420.0, am_hz: 3.0, noise: 0.01 },
    }
}

/// One synthetic clip: an AM tone with two harmonics plus white noise, f0
/// jittered by up to 5 %.
pub fn synth_clip(label: EmotionLabel, seconds: f64, sample_rate: u32, rng: &mut ChaCha8Rng) -> AudioClip {
    let fam = fixture_family(label);
    let f0 = fam.f0_hz * rng.gen_range(0.95..1.05);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let w = std::f64::consts::TAU * f0 * t + phase;
            let am = 0.6 + 0.4 * (std::f64::consts::TAU * fam.am_hz * t).sin();
            let tone = w.sin() + 0.4 * (2.0 * w).sin() + 0.2 * (3.0 * w).sin();
            0.4 * am * tone + fam.noise * rng.gen_range(-1.0..1.0) * 3f64.sqrt()
        })
        .collect();
    AudioClip::new(samples, sample_rate).expect("non-empty clip")
}

/// Writes `count` clips (1-5 s, 16 kHz, balanced over the five labels) under
/// `out_dir/clips` plus `out_dir/manifest.csv`.
pub fn gen_fixtures(out_dir: &Path, seed: u64, count: usize) -> Result<DatasetManifest> {
    let clips = out_dir.join("clips");
    std::fs::create_dir_all(&clips).map_err(|e| Error::file(&clips, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let label = EmotionLabel::ALL[i % 5];
        let seconds = rng.gen_range(1.0..=5.0);
        let clip = synth_clip(label, seconds, 16000, &mut rng);
        let rel = PathBuf::from("clips").join(format!("{}_{:03}.wav", label.name(), i / 5));
        write_wav(&out_dir.join(&rel), &clip)?;
        entries.push(ManifestEntry { path: rel, label });
    }
    let manifest = DatasetManifest { root: out_dir.to_path_buf(), entries };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

/// Mean power-weighted frequency over non-overlapping 512-sample frames.
pub fn spectral_centroid(clip: &AudioClip) -> f64 {
    let n = 512;
    let mut num = 0.0;
    let mut den = 0.0;
    for frame in clip.samples().chunks_exact(n) {
        let p = crate::audio::power_spectrum(frame, n).expect("frame fits");
        for (k, v) in p.iter().enumerate() {
            num += k as f64 * clip.sample_rate() as f64 / n as f64 * v;
            den += v;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub const INDEX_FORMAT: &str = "dynser-feature-index";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub hash: String,
    pub label: EmotionLabel,
    pub mfcc_file: String,
    pub wave_file: String,
}

/// `index.json` in the cache directory, keyed by manifest path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheIndex {
    pub format: String,
    pub version: u32,
    pub config: MfccConfig,
    pub entries: BTreeMap<String, IndexEntry>,
}

impl CacheIndex {
    pub fn load(dir: &Path) -> Result<Option<CacheIndex>> {
        let path = dir.join("index.json");
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("index.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::file(&path, e))
    }
}

/// Cache directory: `$DYNSER_CACHE_DIR` when set, else `default`.
pub fn cache_dir(default: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| default.to_path_buf())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub written: usize,
    pub skipped: usize,
    pub failed: Vec<(String, String)>,
}

fn cache_stem(rel: &Path) -> String {
    rel.to_string_lossy()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn content_hash(bytes: &[u8], config: &MfccConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config)?);
    h.update(bytes);
    Ok(hex::encode(h.finalize()))
}

enum Outcome {
    Written(IndexEntry),
    Skipped(IndexEntry),
}

fn extract_one(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    config: &MfccConfig,
    dir: &Path,
    previous: Option<&IndexEntry>,
) -> Result<Outcome> {
    let path = manifest.resolve(entry);
    let bytes = std::fs::read(&path).map_err(|e| Error::file(&path, e))?;
    let hash = content_hash(&bytes, config)?;
    if let Some(prev) = previous {
        if prev.hash == hash && prev.label == entry.label && dir.join(&prev.mfcc_file).exists() && dir.join(&prev.wave_file).exists() {
            return Ok(Outcome::Skipped(prev.clone()));
        }
    }
    let clip = resample(&decode_wav(&bytes, &path)?, config.sample_rate_hz)?;
    let features = mfcc(&clip, config)?;
    let wave = mirror_pad(clip.samples(), config.clip_len())?;
    let stem = cache_stem(&entry.path);
    let out = IndexEntry {
        hash,
        label: entry.label,
        mfcc_file: format!("{stem}.mfcc"),
        wave_file: format!("{stem}.wave"),
    };
    write_feature_file(&dir.join(&out.mfcc_file), config, features.values())?;
    let n = wave.len();
    write_feature_file(&dir.join(&out.wave_file), config, &Tensor::new(vec![1, n], wave)?)?;
    Ok(Outcome::Written(out))
}

/// Extracts MFCC and padded-waveform features for every manifest clip.
///
/// Clips whose WAV bytes and config hash match the existing index are
/// skipped. Failures are collected per file; the index lists only clips
/// that succeeded.
pub fn extract_features(manifest: &DatasetManifest, config: &MfccConfig, dir: &Path) -> Result<ExtractSummary> {
    config.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let previous = match CacheIndex::load(dir) {
        Ok(Some(idx)) if idx.config == *config => idx.entries,
        _ => BTreeMap::new(),
    };
    let results: Vec<(String, Result<Outcome>)> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let key = e.path.to_string_lossy().into_owned();
            let r = extract_one(manifest, e, config, dir, previous.get(&key));
            (key, r)
        })
        .collect();
    let mut summary = ExtractSummary::default();
    let mut entries = BTreeMap::new();
    for (key, r) in results {
        match r {
            Ok(Outcome::Written(e)) => {
                summary.written += 1;
                entries.insert(key, e);
            }
            Ok(Outcome::Skipped(e)) => {
                summary.skipped += 1;
                entries.insert(key, e);
            }
            Err(err) => {
                log::warn!("{key}: {err}");
                summary.failed.push((key, err.to_string()));
            }
        }
    }
    CacheIndex {
        format: INDEX_FORMAT.into(),
        version: 1,
        config: config.clone(),
        entries,
    }
    .save(dir)?;
    Ok(summary)
}

/// Which cached streams to load.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    pub mfcc: bool,
    pub wave: bool,
}

/// Loads cached features for every manifest clip, in manifest order.
pub fn load_dataset(manifest: &DatasetManifest, config: &MfccConfig, dir: &Path, streams: Streams) -> Result<Dataset> {
    let missing = || {
        Error::Data(format!(
            "no feature cache at {}; run `dynser extract` with the same config first",
            dir.display()
        ))
    };
    let index = CacheIndex::load(dir)?.ok_or_else(missing)?;
    if index.config != *config {
        return Err(Error::Data(format!(
            "feature cache at {} was built with a different audio config; rerun `dynser extract`",
            dir.display()
        )));
    }
    let examples = manifest
        .entries
        .par_iter()
        .map(|e| {
            let key = e.path.to_string_lossy().into_owned();
            let entry = index.entries.get(&key).ok_or_else(|| {
                Error::Data(format!("{key} is not in the feature cache; run `dynser extract` first"))
            })?;
            let mfcc = if streams.mfcc {
                let (_, t) = read_feature_file(&dir.join(&entry.mfcc_file))?;
                let m = crate::audio::MfccMatrix::new(t, config.clone())?;
                Some(m.to_image())
            } else {
                None
            };
            let wave = if streams.wave {
                Some(read_feature_file(&dir.join(&entry.wave_file))?.1)
            } else {
                None
            };
            Ok(Example { id: key, label: e.label.id(), mfcc, wave })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { examples })
}
