//! Prediction-driven dataset building: gated frames are written into one
//! folder per class with the label in the file name, and the resulting
//! manifest can be split into stratified train/test/validation sets.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionClass, FramePrediction};
use crate::error::{Error, Result};
use crate::ingest::RawFrame;
use crate::pipeline::AnalysisReport;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DatasetEntry {
    /// Relative to the dataset root.
    pub path: PathBuf,
    pub label: ActionClass,
    pub frame_index: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub source_digest: String,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn count(&self, label: ActionClass) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }
}

/// `<class>_<frame_index>.png`, index zero-padded like decoded frames.
pub fn labelled_file_name(label: ActionClass, frame_index: u64) -> String {
    crate::ingest::frame_file_name(label.name(), frame_index)
}

/// Incrementally writes gated frames under `<root>/<class>/`.
#[derive(Debug)]
pub struct DatasetWriter {
    root: PathBuf,
    entries: Vec<DatasetEntry>,
}

impl DatasetWriter {
    /// Creates the root and all four class folders.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for class in ActionClass::ALL {
            let dir = root.join(class.name());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(DatasetWriter {
            root,
            entries: Vec::new(),
        })
    }

    /// Writes `frame` if `prediction` passed the gate; returns whether it did.
    pub fn add(&mut self, frame: &RawFrame, prediction: &FramePrediction) -> Result<bool> {
        if !prediction.gated {
            return Ok(false);
        }
        let rel = Path::new(prediction.label.name())
            .join(labelled_file_name(prediction.label, prediction.frame_index));
        let path = self.root.join(&rel);
        frame.pixels.save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        self.entries.push(DatasetEntry {
            path: rel,
            label: prediction.label,
            frame_index: prediction.frame_index,
        });
        Ok(true)
    }

    /// Writes `manifest.json` into the root and returns it.
    pub fn finish(self, source_digest: &str) -> Result<DatasetManifest> {
        let manifest = DatasetManifest {
            source_digest: source_digest.to_string(),
            entries: self.entries,
        };
        manifest.save(&self.root.join(MANIFEST_FILE))?;
        Ok(manifest)
    }
}

/// Writes every gated frame of `report` found in `frames` (matched by frame
/// index) into `out_dir`.
pub fn collect_dataset(report: &AnalysisReport, frames: &[RawFrame], out_dir: &Path) -> Result<DatasetManifest> {
    let by_index: BTreeMap<u64, &RawFrame> = frames.iter().map(|f| (f.frame_index, f)).collect();
    let mut writer = DatasetWriter::create(out_dir)?;
    for prediction in report.gated_frames() {
        let frame = by_index.get(&prediction.frame_index).ok_or_else(|| {
            Error::invalid(format!("no frame supplied for gated frame {}", prediction.frame_index))
        })?;
        writer.add(frame, prediction)?;
    }
    writer.finish(&report.input_digest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifests {
    pub train: DatasetManifest,
    pub test: DatasetManifest,
    pub validation: DatasetManifest,
}

/// Integer sizes for `n` items split by `ratios`, by largest remainder; ties
/// in the remainder go to the earlier part.
pub fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| n as f64 * r);
    // guard against 0.7 * 10 landing just under 7
    let mut sizes = quotas.map(|q| (q + 1e-9).floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - sizes[a] as f64;
        let fb = quotas[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Deterministic stratified split into train, test and validation.
pub fn split_dataset(manifest: &DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<SplitManifests> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::invalid(format!("split ratios must be non-negative: {ratios:?}")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split ratios sum to {sum}, not 1")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<DatasetEntry>; 3] = Default::default();
    for class in ActionClass::ALL {
        let mut group: Vec<DatasetEntry> = manifest
            .entries
            .iter()
            .filter(|e| e.label == class)
            .cloned()
            .collect();
        group.shuffle(&mut rng);
        let sizes = largest_remainder(group.len(), ratios);
        let mut rest = group.into_iter();
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend(rest.by_ref().take(size));
        }
    }
    let [train, test, validation] = parts.map(|entries| DatasetManifest {
        source_digest: manifest.source_digest.clone(),
        entries,
    });
    Ok(SplitManifests {
        train,
        test,
        validation,
    })
}

pub fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad ratio {p:?}"))))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| Error::invalid(format!("expected three ratios, got {}", v.len())))
}
