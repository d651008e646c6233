//! Golden-output fixtures recorded when a model is exported.
//!
//! `<name>.golden.json` lists input images (relative to the golden file), the
//! SHA-256 of their preprocessed input (little-endian f64 values) and the four
//! probabilities the exporting framework produced.

use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::RawFrame;
use crate::preprocess::preprocess;

use super::Classifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenFixture {
    pub input: PathBuf,
    pub input_sha256: String,
    pub probabilities: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenSet {
    pub model: String,
    pub fixtures: Vec<GoldenFixture>,
}

impl GoldenSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCheck {
    pub fixtures: usize,
    pub max_abs_diff: f64,
}

/// Runs every fixture through `classifier` and reports the largest
/// per-entry deviation from the recorded probabilities.
pub fn verify_golden(classifier: &dyn Classifier, golden_path: &Path) -> Result<GoldenCheck> {
    let set = GoldenSet::load(golden_path)?;
    let base = golden_path.parent().unwrap_or(Path::new("."));
    let mut max_abs_diff = 0.0f64;
    for fixture in &set.fixtures {
        let path = base.join(&fixture.input);
        let pixels = image::open(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        let frame = RawFrame {
            frame_index: 0,
            pixels: DynamicImage::ImageRgb8(pixels.to_rgb8()),
        };
        let input = preprocess(&frame)?;
        let digest = hex::encode(Sha256::digest(input.to_le_bytes()));
        if digest != fixture.input_sha256 {
            return Err(Error::invalid(format!(
                "{}: preprocessed input hash {digest} differs from recorded {}",
                path.display(),
                fixture.input_sha256
            )));
        }
        let got = classifier.classify(&input)?;
        for (g, w) in got.values().iter().zip(fixture.probabilities) {
            max_abs_diff = max_abs_diff.max((g - w).abs());
        }
    }
    Ok(GoldenCheck {
        fixtures: set.fixtures.len(),
        max_abs_diff,
    })
}
