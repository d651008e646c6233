use crate::domain::{ActionClass, ProbabilityVector, NUM_CLASSES};
use crate::error::Result;
use crate::preprocess::ModelInput;

use super::Classifier;

const MOCK_PEAK: f64 = 0.97;
const MOCK_REST: f64 = 0.01;

/// Deterministic stand-in classifier driven by frame brightness.
///
/// The mean input value is bucketed into four equal intervals of `[0, 1]`;
/// the bucket's class (in wire-id order) gets 0.97 and every other class 0.01.
/// Uniform frames of byte value 32, 96, 160 and 224 therefore read as kill,
/// death, no-action and smoke.
#[derive(Debug, Clone)]
pub struct MockClassifier {
    name: String,
}

impl MockClassifier {
    pub fn new(name: impl Into<String>) -> Self {
        MockClassifier { name: name.into() }
    }

    pub fn class_for_mean(mean: f64) -> ActionClass {
        let bucket = (mean.clamp(0.0, 1.0) * NUM_CLASSES as f64).floor() as usize;
        ActionClass::ALL[bucket.min(NUM_CLASSES - 1)]
    }

    /// Byte value whose uniform frame the mock reads as `class`.
    pub fn brightness_for(class: ActionClass) -> u8 {
        32 + 64 * class.wire_id()
    }
}

impl Classifier for MockClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn classify(&self, input: &ModelInput) -> Result<ProbabilityVector> {
        let class = Self::class_for_mean(input.mean());
        let mut p = [MOCK_REST; NUM_CLASSES];
        p[class.index()] = MOCK_PEAK;
        ProbabilityVector::new(p)
    }
}
