//! Shared domain types: the four action classes, probability vectors over
//! them, one-hot labels, per-frame predictions and final counts.
//!
//! Everything here is a plain value type. Vectors are always stored in wire-id
//! order (kill, death, no-action, smoke) so CSV columns and arrays line up.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of action classes.
pub const NUM_CLASSES: usize = 4;

/// Tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Kill,
    Death,
    #[serde(rename = "noaction")]
    NoAction,
    Smoke,
}

impl ActionClass {
    /// All classes in wire-id order.
    pub const ALL: [ActionClass; NUM_CLASSES] = [
        ActionClass::Kill,
        ActionClass::Death,
        ActionClass::NoAction,
        ActionClass::Smoke,
    ];

    pub fn wire_id(self) -> u8 {
        match self {
            ActionClass::Kill => 0,
            ActionClass::Death => 1,
            ActionClass::NoAction => 2,
            ActionClass::Smoke => 3,
        }
    }

    pub fn from_wire_id(id: u8) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown action wire id {id}")))
    }

    pub fn index(self) -> usize {
        self.wire_id() as usize
    }

    /// Lower-case name used in CSV rows, JSON and dataset directories.
    pub fn name(self) -> &'static str {
        match self {
            ActionClass::Kill => "kill",
            ActionClass::Death => "death",
            ActionClass::NoAction => "noaction",
            ActionClass::Smoke => "smoke",
        }
    }

    pub fn one_hot(self) -> OneHotLabel {
        let mut bits = [0u8; NUM_CLASSES];
        bits[self.index()] = 1;
        OneHotLabel(bits)
    }
}

impl fmt::Display for ActionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionClass {
    type Err = Error;

    /// Accepts the class name (any case, `no_action`/`no action` included) or
    /// its wire id.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "kill" | "k" => Ok(ActionClass::Kill),
            "death" | "d" => Ok(ActionClass::Death),
            "noaction" | "na" | "none" => Ok(ActionClass::NoAction),
            "smoke" | "s" => Ok(ActionClass::Smoke),
            other => other
                .parse::<u8>()
                .map_err(|_| Error::invalid(format!("unknown action label {s:?}")))
                .and_then(ActionClass::from_wire_id),
        }
    }
}

/// One-hot encoding of an [`ActionClass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OneHotLabel([u8; NUM_CLASSES]);

impl OneHotLabel {
    pub fn new(bits: [u8; NUM_CLASSES]) -> Result<Self> {
        let ones = bits.iter().filter(|&&b| b == 1).count();
        let zeros = bits.iter().filter(|&&b| b == 0).count();
        if ones != 1 || zeros != NUM_CLASSES - 1 {
            return Err(Error::invalid(format!("not a one-hot vector: {bits:?}")));
        }
        Ok(OneHotLabel(bits))
    }

    pub fn bits(&self) -> [u8; NUM_CLASSES] {
        self.0
    }

    pub fn decode(&self) -> ActionClass {
        let idx = self.0.iter().position(|&b| b == 1).expect("one-hot invariant");
        ActionClass::ALL[idx]
    }
}

pub fn one_hot(class: ActionClass) -> OneHotLabel {
    class.one_hot()
}

/// Softmax output over the four classes, in wire-id order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_CLASSES]", into = "[f64; NUM_CLASSES]")]
pub struct ProbabilityVector([f64; NUM_CLASSES]);

impl ProbabilityVector {
    pub fn new(p: [f64; NUM_CLASSES]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid(format!("probabilities out of [0,1]: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbabilityVector(p))
    }

    /// Builds a vector from raw model output, renormalizing float drift up to
    /// `tolerance` away from a unit sum.
    pub fn from_model_output(raw: &[f32], tolerance: f64) -> Result<Self> {
        if raw.len() != NUM_CLASSES {
            return Err(Error::invalid(format!(
                "model produced {} outputs, expected {NUM_CLASSES}",
                raw.len()
            )));
        }
        let mut p = [0.0; NUM_CLASSES];
        for (dst, &v) in p.iter_mut().zip(raw) {
            let v = f64::from(v);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("invalid model output {raw:?}")));
            }
            *dst = v;
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::invalid(format!(
                "model output sums to {sum}; is the output layer a softmax?"
            )));
        }
        p.iter_mut().for_each(|v| *v /= sum);
        Self::new(p)
    }

    pub fn uniform() -> Self {
        ProbabilityVector([0.25; NUM_CLASSES])
    }

    pub fn values(&self) -> [f64; NUM_CLASSES] {
        self.0
    }

    pub fn get(&self, class: ActionClass) -> f64 {
        self.0[class.index()]
    }

    /// Most likely class; exact ties go to the lowest wire id.
    pub fn argmax(&self) -> ActionClass {
        ActionClass::ALL[argmax_index(&self.0)]
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<[f64; NUM_CLASSES]> for ProbabilityVector {
    type Error = Error;

    fn try_from(p: [f64; NUM_CLASSES]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ProbabilityVector> for [f64; NUM_CLASSES] {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

fn argmax_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: [f64; NUM_CLASSES]) -> Result<ProbabilityVector> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite logits: {logits:?}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|v| (v - max).exp());
    let sum: f64 = exps.iter().sum();
    Ok(ProbabilityVector(exps.map(|e| e / sum)))
}

/// Per-model output for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVote {
    pub model: String,
    pub probabilities: ProbabilityVector,
}

/// Prediction for one sampled frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePrediction {
    /// Index in the normalized 30 fps stream.
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub per_model: Vec<ModelVote>,
    pub ensemble: ProbabilityVector,
    pub label: ActionClass,
    /// `max(ensemble)` strictly exceeded the confidence threshold.
    pub gated: bool,
}

impl FramePrediction {
    pub fn new(
        frame_index: u64,
        timestamp_s: f64,
        per_model: Vec<ModelVote>,
        ensemble: ProbabilityVector,
        threshold: f64,
    ) -> Self {
        FramePrediction {
            frame_index,
            timestamp_s,
            per_model,
            label: ensemble.argmax(),
            gated: ensemble.max() > threshold,
            ensemble,
        }
    }
}

/// Deduplicated per-class event tallies. `NoAction` is never a key and zero
/// counts are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<ActionClass, u64>", into = "BTreeMap<ActionClass, u64>")]
pub struct ActionCounts(BTreeMap<ActionClass, u64>);

impl ActionCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Increments `class`; `NoAction` is ignored.
    pub fn increment(&mut self, class: ActionClass) {
        if class != ActionClass::NoAction {
            *self.0.entry(class).or_insert(0) += 1;
        }
    }

    pub fn get(&self, class: ActionClass) -> u64 {
        self.0.get(&class).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActionClass, u64)> + '_ {
        self.0.iter().map(|(c, n)| (*c, *n))
    }

    /// Builds counts from explicit pairs, e.g. `[(Kill, 5), (Death, 4)]`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ActionClass, u64)>) -> Result<Self> {
        let map: BTreeMap<_, _> = pairs.into_iter().collect();
        Self::try_from(map)
    }
}

impl TryFrom<BTreeMap<ActionClass, u64>> for ActionCounts {
    type Error = Error;

    fn try_from(mut map: BTreeMap<ActionClass, u64>) -> Result<Self> {
        if map.get(&ActionClass::NoAction).is_some_and(|&n| n > 0) {
            return Err(Error::invalid("no-action frames are never counted"));
        }
        map.retain(|c, n| *c != ActionClass::NoAction && *n > 0);
        Ok(ActionCounts(map))
    }
}

impl From<ActionCounts> for BTreeMap<ActionClass, u64> {
    fn from(c: ActionCounts) -> Self {
        c.0
    }
}

impl fmt::Display for ActionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}: {n}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wire_ids_are_fixed() {
        let ids: Vec<u8> = ActionClass::ALL.iter().map(|c| c.wire_id()).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        for c in ActionClass::ALL {
            assert_eq!(ActionClass::from_wire_id(c.wire_id()).unwrap(), c);
        }
        assert!(ActionClass::from_wire_id(4).is_err());
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(ActionClass::Smoke).bits(), [0, 0, 0, 1]);
        assert_eq!(one_hot(ActionClass::Kill).bits(), [1, 0, 0, 0]);
        assert_eq!(OneHotLabel::new([0, 1, 0, 0]).unwrap().decode(), ActionClass::Death);
        assert!(OneHotLabel::new([0, 1, 1, 0]).is_err());
        assert!(OneHotLabel::new([0, 0, 0, 0]).is_err());
        assert!(OneHotLabel::new([0, 2, 0, 0]).is_err());
    }

    #[test]
    fn one_hot_round_trips() {
        for c in ActionClass::ALL {
            assert_eq!(c.one_hot().decode(), c);
        }
    }

    #[test]
    fn parse_labels() {
        assert_eq!("Kill".parse::<ActionClass>().unwrap(), ActionClass::Kill);
        assert_eq!("No Action".parse::<ActionClass>().unwrap(), ActionClass::NoAction);
        assert_eq!("no_action".parse::<ActionClass>().unwrap(), ActionClass::NoAction);
        assert_eq!("3".parse::<ActionClass>().unwrap(), ActionClass::Smoke);
        assert!("grenade".parse::<ActionClass>().is_err());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax([0.0; 4]).unwrap();
        for v in p.values() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn softmax_matches_high_precision_reference() {
        // 40-digit evaluation of exp(x_i)/sum exp(x) for x = [1,2,3,4]
        let expected = [
            0.032_058_603_280_084_988_450_811_47,
            0.087_144_318_742_032_567_489_459_39,
            0.236_882_818_089_910_132_298_029_3,
            0.643_914_259_887_972_311_761_699_9,
        ];
        let p = softmax([1.0, 2.0, 3.0, 4.0]).unwrap();
        for (got, want) in p.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax([0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(softmax([0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax([1000.0, 999.0, 0.0, -1000.0]).unwrap();
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.argmax(), ActionClass::Kill);
    }

    #[test]
    fn argmax_ties_go_to_lowest_wire_id() {
        let p = ProbabilityVector::new([0.1, 0.4, 0.1, 0.4]).unwrap();
        assert_eq!(p.argmax(), ActionClass::Death);
        assert_eq!(ProbabilityVector::uniform().argmax(), ActionClass::Kill);
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(ProbabilityVector::new([1.2, -0.2, 0.0, 0.0]).is_err());
        let json = serde_json::to_string(&ProbabilityVector::uniform()).unwrap();
        assert_eq!(json, "[0.25,0.25,0.25,0.25]");
        assert!(serde_json::from_str::<ProbabilityVector>("[0.9,0.9,0,0]").is_err());
    }

    #[test]
    fn counts_never_hold_noaction() {
        let mut c = ActionCounts::new();
        c.increment(ActionClass::NoAction);
        assert!(c.is_empty());
        c.increment(ActionClass::Kill);
        assert_eq!(c.get(ActionClass::Kill), 1);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"kill":1}"#);
        assert!(serde_json::from_str::<ActionCounts>(r#"{"noaction":2}"#).is_err());
    }

    #[test]
    fn gated_is_strict() {
        let p = ProbabilityVector::new([0.75, 0.25, 0.0, 0.0]).unwrap();
        assert!(!FramePrediction::new(0, 0.0, vec![], p, 0.75).gated);
        let p = ProbabilityVector::new([0.7500001, 0.2499999, 0.0, 0.0]).unwrap();
        assert!(FramePrediction::new(0, 0.0, vec![], p, 0.75).gated);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(x in prop::array::uniform4(-15.0f64..15.0)) {
            let p = softmax(x).unwrap();
            let sum: f64 = p.values().iter().sum();
            prop_assert!((sum - 1.0).abs() < SUM_TOLERANCE);
            prop_assert!(p.values().iter().all(|v| *v > 0.0 && *v < 1.0));
        }

        // past a spread of ~37 the small entries underflow relative to 1.0
        #[test]
        fn wide_logits_stay_in_closed_unit_interval(x in prop::array::uniform4(-1e6f64..1e6)) {
            let p = softmax(x).unwrap();
            let sum: f64 = p.values().iter().sum();
            prop_assert!((sum - 1.0).abs() < SUM_TOLERANCE);
            prop_assert!(p.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn softmax_preserves_unique_argmax(x in prop::array::uniform4(-50.0f64..50.0)) {
            let best = argmax_index(&x);
            prop_assume!(x.iter().enumerate().all(|(i, v)| i == best || *v < x[best]));
            prop_assert_eq!(softmax(x).unwrap().argmax().index(), best);
        }

        #[test]
        fn softmax_is_shift_invariant(x in prop::array::uniform4(-20.0f64..20.0), k in -100.0f64..100.0) {
            let a = softmax(x).unwrap().values();
            let b = softmax(x.map(|v| v + k)).unwrap().values();
            for (u, v) in a.iter().zip(b) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
