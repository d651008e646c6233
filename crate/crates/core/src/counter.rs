//! Turning per-frame predictions into event counts.
//!
//! Frames first pass a confidence gate: only those whose top ensemble
//! probability is strictly above the threshold are kept. The surviving labels
//! are then folded into counts with duplicate suppression, so that an action
//! spanning several sampled seconds is not counted once per second.
//!
//! Three suppression modes exist:
//!
//! * [`CountMode::Literal`]: a label equal to the previous element's
//!   *effective* label is rewritten to no-action and not counted. Because the
//!   rewrite feeds the next comparison, a run `K K K` counts two kills.
//! * [`CountMode::RunCollapse`]: each maximal run of one label counts once;
//!   no-action frames do not interrupt a run.
//! * [`CountMode::NoActionSeparated`]: like run-collapse, but a no-action
//!   frame ends the current run.
//!
//! In every mode no-action frames are never counted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionClass, ActionCounts, FramePrediction};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    #[default]
    Literal,
    RunCollapse,
    NoactionSeparated,
}

impl CountMode {
    pub const ALL: [CountMode; 3] = [
        CountMode::Literal,
        CountMode::RunCollapse,
        CountMode::NoactionSeparated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Literal => "literal",
            CountMode::RunCollapse => "run_collapse",
            CountMode::NoactionSeparated => "noaction_separated",
        }
    }
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "literal" => Ok(CountMode::Literal),
            "run_collapse" => Ok(CountMode::RunCollapse),
            "noaction_separated" => Ok(CountMode::NoactionSeparated),
            _ => Err(Error::invalid(format!(
                "unknown count mode {s:?} (expected literal, run_collapse or noaction_separated)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterConfig {
    pub threshold: f64,
    pub mode: CountMode,
}

impl Default for CounterConfig {
    fn default() -> Self {
        CounterConfig {
            threshold: DEFAULT_THRESHOLD,
            mode: CountMode::Literal,
        }
    }
}

impl CounterConfig {
    pub fn new(threshold: f64, mode: CountMode) -> Result<Self> {
        let cfg = CounterConfig { threshold, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!(
                "threshold must lie strictly between 0 and 1, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: CountMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn passes(&self, max_probability: f64) -> bool {
        max_probability > self.threshold
    }
}

/// Keeps frames whose top ensemble probability is strictly above the
/// threshold; the rest are dropped. Order is preserved.
pub fn gate(frames: &[FramePrediction], cfg: &CounterConfig) -> Vec<FramePrediction> {
    frames
        .iter()
        .filter(|f| cfg.passes(f.ensemble.max()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountStep {
    pub frame_index: u64,
    pub label_before: ActionClass,
    pub label_after: ActionClass,
    pub counted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTrace {
    pub steps: Vec<CountStep>,
    pub final_counts: ActionCounts,
}

/// Streaming counter state for one stream. Feed gated labels in order.
#[derive(Debug, Clone)]
pub struct EventCounter {
    mode: CountMode,
    /// Literal mode: effective label of the last non-no-action element.
    /// Run modes: label of the run in progress, no-action if none.
    previous: ActionClass,
    counts: ActionCounts,
}

impl EventCounter {
    pub fn new(mode: CountMode) -> Self {
        EventCounter {
            mode,
            previous: ActionClass::NoAction,
            counts: ActionCounts::new(),
        }
    }

    /// Consumes one gated label and reports what happened to it.
    pub fn push(&mut self, frame_index: u64, label: ActionClass) -> CountStep {
        let mut step = CountStep {
            frame_index,
            label_before: label,
            label_after: label,
            counted: false,
        };
        if label == ActionClass::NoAction {
            if self.mode == CountMode::NoactionSeparated {
                self.previous = ActionClass::NoAction;
            }
            return step;
        }
        match self.mode {
            CountMode::Literal => {
                if label == self.previous {
                    step.label_after = ActionClass::NoAction;
                } else {
                    step.counted = true;
                }
                self.previous = step.label_after;
            }
            CountMode::RunCollapse | CountMode::NoactionSeparated => {
                if label == self.previous {
                    step.label_after = ActionClass::NoAction;
                } else {
                    step.counted = true;
                }
                self.previous = label;
            }
        }
        if step.counted {
            self.counts.increment(label);
        }
        step
    }

    pub fn counts(&self) -> &ActionCounts {
        &self.counts
    }

    pub fn into_counts(self) -> ActionCounts {
        self.counts
    }
}

/// Folds a gated label stream into counts.
pub fn count_labels(labels: &[(u64, ActionClass)], mode: CountMode) -> CountTrace {
    let mut counter = EventCounter::new(mode);
    let steps = labels
        .iter()
        .map(|&(frame_index, label)| counter.push(frame_index, label))
        .collect();
    CountTrace {
        steps,
        final_counts: counter.into_counts(),
    }
}

/// Folds gated frames into counts; `gated` is normally the output of [`gate`].
pub fn count_events(gated: &[FramePrediction], cfg: &CounterConfig) -> CountTrace {
    let labels: Vec<(u64, ActionClass)> = gated.iter().map(|f| (f.frame_index, f.label)).collect();
    count_labels(&labels, cfg.mode)
}
