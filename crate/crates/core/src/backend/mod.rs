//! Per-frame classifiers.
//!
//! A backend maps a [`ModelInput`] to a [`ProbabilityVector`]. Two kinds ship
//! with the engine: the deterministic [`MockClassifier`] and, behind the
//! `onnx` feature, exported backbone+head models described by a
//! `<name>.manifest.json` sidecar.

mod golden;
mod mock;
#[cfg(feature = "onnx")]
mod onnx;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::ProbabilityVector;
use crate::error::{Error, Result};
use crate::preprocess::{InputScaling, ModelInput};

pub use golden::{verify_golden, GoldenCheck, GoldenFixture, GoldenSet};
pub use mock::MockClassifier;
#[cfg(feature = "onnx")]
pub use onnx::OnnxClassifier;

/// Environment variable pointing at the directory holding exported models.
pub const MODEL_DIR_ENV: &str = "FRAGC_MODEL_DIR";

/// A loaded per-frame classifier. Handles are immutable and shared across
/// threads.
pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;

    fn classify(&self, input: &ModelInput) -> Result<ProbabilityVector>;
}

/// Backbone output shapes (before flattening) of the supported backbones.
pub const KNOWN_BACKBONES: &[(&str, [usize; 3])] = &[
    ("vgg16", [7, 7, 512]),
    ("inception_v3", [5, 5, 2048]),
    ("resnet152_v2", [7, 7, 2048]),
    ("inception_resnet_v2", [5, 5, 1536]),
    ("xception", [7, 7, 2048]),
];

pub fn known_feature_shape(name: &str) -> Option<[usize; 3]> {
    KNOWN_BACKBONES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}

/// What the model's single output holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    #[default]
    Probabilities,
    Logits,
}

/// Sidecar describing an exported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendManifest {
    pub name: String,
    pub feature_shape: [usize; 3],
    pub flattened_dim: usize,
    #[serde(default)]
    pub input_scaling: InputScaling,
    /// Relative paths resolve against the manifest's directory.
    #[serde(default)]
    pub model_artifact_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opset: Option<u32>,
    #[serde(default)]
    pub output: OutputKind,
    /// Passed through to the runtime untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution_provider: Option<String>,
}

impl BackendManifest {
    pub fn mock(name: impl Into<String>) -> Self {
        BackendManifest {
            name: name.into(),
            feature_shape: [1, 1, 1],
            flattened_dim: 1,
            input_scaling: InputScaling::Unit,
            model_artifact_path: PathBuf::new(),
            opset: None,
            output: OutputKind::Probabilities,
            execution_provider: None,
        }
    }

    pub fn is_mock(&self) -> bool {
        self.name == "mock" || self.name.starts_with("mock-")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Manifest("backend name is empty".into()));
        }
        let product: usize = self.feature_shape.iter().product();
        if product != self.flattened_dim {
            return Err(Error::Manifest(format!(
                "{}: flattened_dim {} does not match feature_shape {:?} (product {product})",
                self.name, self.flattened_dim, self.feature_shape
            )));
        }
        if let Some(expected) = known_feature_shape(&self.name) {
            if expected != self.feature_shape {
                return Err(Error::Manifest(format!(
                    "{}: feature_shape {:?} does not match the backbone's {:?}",
                    self.name, self.feature_shape, expected
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: BackendManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        if manifest.model_artifact_path.is_relative() && !manifest.is_mock() {
            if let Some(dir) = path.parent() {
                manifest.model_artifact_path = dir.join(&manifest.model_artifact_path);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Per-sample min-max scaled backbone features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub normalized: bool,
}

/// `(x - min) / (max - min)`; a constant vector maps to all zeros.
pub fn normalize_features(raw: &[f64]) -> FeatureVector {
    let (min, max) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    let values = if raw.is_empty() || range == 0.0 {
        vec![0.0; raw.len()]
    } else {
        raw.iter().map(|&v| (v - min) / range).collect()
    };
    FeatureVector {
        values,
        normalized: true,
    }
}

/// Loads the classifier a manifest describes.
pub fn load_backend(manifest: &BackendManifest) -> Result<Arc<dyn Classifier>> {
    manifest.validate()?;
    if manifest.is_mock() {
        return Ok(Arc::new(MockClassifier::new(manifest.name.clone())));
    }
    load_artifact(manifest)
}

#[cfg(feature = "onnx")]
fn load_artifact(manifest: &BackendManifest) -> Result<Arc<dyn Classifier>> {
    Ok(Arc::new(OnnxClassifier::load(manifest)?))
}

#[cfg(not(feature = "onnx"))]
fn load_artifact(manifest: &BackendManifest) -> Result<Arc<dyn Classifier>> {
    Err(Error::Load(format!(
        "{}: built without the `onnx` feature",
        manifest.name
    )))
}

/// Resolves a backend argument: `mock`, a path to a `.manifest.json`, or a
/// model name looked up as `<model_dir>/<name>.manifest.json`.
pub fn resolve_backend(spec: &str, model_dir: Option<&Path>) -> Result<Arc<dyn Classifier>> {
    if spec == "mock" || spec.starts_with("mock-") {
        return load_backend(&BackendManifest::mock(spec));
    }
    let as_path = Path::new(spec);
    let manifest_path = if spec.ends_with(".json") || as_path.is_file() {
        as_path.to_path_buf()
    } else {
        let dir = model_dir
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(MODEL_DIR_ENV).map(PathBuf::from))
            .ok_or_else(|| {
                Error::Load(format!(
                    "backend {spec:?}: no model directory (set --model-dir or {MODEL_DIR_ENV})"
                ))
            })?;
        dir.join(format!("{spec}.manifest.json"))
    };
    let manifest = BackendManifest::load(&manifest_path)?;
    load_backend(&manifest)
}

/// `n` independently named mock backends, `mock-1` .. `mock-n`.
pub fn mock_ensemble(n: usize) -> Vec<Arc<dyn Classifier>> {
    (1..=n)
        .map(|i| Arc::new(MockClassifier::new(format!("mock-{i}"))) as Arc<dyn Classifier>)
        .collect()
}
