use std::sync::Arc;

use tract_onnx::prelude::*;
use tract_onnx::tract_hir::infer::Factoid;

use crate::domain::{softmax, ProbabilityVector, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::preprocess::{InputScaling, ModelInput, INPUT_SIZE};

use super::{BackendManifest, Classifier, OutputKind};

const EXPECTED_INPUT: [usize; 4] = [1, INPUT_SIZE as usize, INPUT_SIZE as usize, 3];
const EXPECTED_OUTPUT: [usize; 2] = [1, NUM_CLASSES];
/// How far a softmax output's sum may drift from 1 before it is rejected.
const OUTPUT_SUM_TOLERANCE: f64 = 1e-3;

/// Fused backbone+head model exported to ONNX, run with tract.
///
/// The graph must take one NHWC `[1, 224, 224, 3]` f32 tensor and return one
/// `[1, 4]` tensor.
pub struct OnnxClassifier {
    name: String,
    scaling: InputScaling,
    output: OutputKind,
    plan: Arc<TypedRunnableModel>,
}

impl std::fmt::Debug for OnnxClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxClassifier")
            .field("name", &self.name)
            .field("scaling", &self.scaling)
            .finish_non_exhaustive()
    }
}

impl OnnxClassifier {
    pub fn load(manifest: &BackendManifest) -> Result<Self> {
        let path = &manifest.model_artifact_path;
        if !path.is_file() {
            return Err(Error::Load(format!(
                "{}: model artifact {} not found",
                manifest.name,
                path.display()
            )));
        }
        let load_err = |e: TractError| Error::Load(format!("{}: {}: {e:#}", manifest.name, path.display()));

        let mut model = tract_onnx::onnx().model_for_path(path).map_err(load_err)?;
        if model.inputs.len() != 1 || model.outputs.len() != 1 {
            return Err(Error::Manifest(format!(
                "{}: expected one input and one output, artifact has {} and {}",
                manifest.name,
                model.inputs.len(),
                model.outputs.len()
            )));
        }

        let declared = model.input_fact(0).map_err(load_err)?.shape.clone();
        if let Some(dims) = declared.concretize() {
            let concrete: Vec<Option<i64>> = dims.iter().map(|d| d.to_i64().ok()).collect();
            let matches = concrete.len() == EXPECTED_INPUT.len()
                && concrete
                    .iter()
                    .zip(EXPECTED_INPUT)
                    .enumerate()
                    // a symbolic batch dimension is fine
                    .all(|(i, (d, e))| d.map_or(i == 0, |d| d as usize == e));
            if !matches {
                let shown: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                return Err(Error::Manifest(format!(
                    "{}: artifact input shape [{}] does not match expected {:?}",
                    manifest.name,
                    shown.join(", "),
                    EXPECTED_INPUT
                )));
            }
        }
        model
            .set_input_fact(0, f32::fact(EXPECTED_INPUT).into())
            .map_err(load_err)?;
        let model = model.into_optimized().map_err(load_err)?;

        let out_shape = model.output_fact(0).map_err(load_err)?.shape.as_concrete().map(|s| s.to_vec());
        if out_shape.as_deref() != Some(&EXPECTED_OUTPUT[..]) {
            return Err(Error::Manifest(format!(
                "{}: artifact output shape {:?} does not match expected {:?}",
                manifest.name, out_shape, EXPECTED_OUTPUT
            )));
        }
        let plan = model.into_runnable().map_err(load_err)?;
        Ok(OnnxClassifier {
            name: manifest.name.clone(),
            scaling: manifest.input_scaling,
            output: manifest.output,
            plan,
        })
    }
}

impl Classifier for OnnxClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn classify(&self, input: &ModelInput) -> Result<ProbabilityVector> {
        let data = self.scaling.apply(input);
        let tensor = tract_ndarray::Array4::from_shape_vec(EXPECTED_INPUT, data)
            .map_err(|e| Error::invalid(format!("input tensor: {e}")))?
            .into_tensor();
        let outputs = self
            .plan
            .run(tvec!(tensor.into()))
            .map_err(|e| Error::Load(format!("{}: inference failed: {e:#}", self.name)))?;
        let view = outputs[0]
            .to_plain_array_view::<f32>()
            .map_err(|e| Error::Load(format!("{}: output is not f32: {e:#}", self.name)))?;
        let raw: Vec<f32> = view.iter().copied().collect();
        match self.output {
            OutputKind::Probabilities => ProbabilityVector::from_model_output(&raw, OUTPUT_SUM_TOLERANCE),
            OutputKind::Logits => {
                let logits: [f64; NUM_CLASSES] = raw
                    .iter()
                    .map(|&v| f64::from(v))
                    .collect::<Vec<_>>()
                    .try_into()
                    .map_err(|v: Vec<f64>| Error::invalid(format!("expected 4 logits, got {}", v.len())))?;
                softmax(logits)
            }
        }
    }
}
