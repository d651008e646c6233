//! End-to-end analysis of one input.
//!
//! `normalize_fps -> sample_frames -> preprocess -> classify (per backend) ->
//! majority_vote -> gate -> count`, streamed frame by frame: each sampled
//! frame is reported as soon as it is classified and counts are final when
//! the stream ends.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::Classifier;
use crate::counter::{count_events, gate, CountMode, CounterConfig, EventCounter};
use crate::domain::{ActionCounts, FramePrediction, ModelVote};
use crate::ensemble::majority_vote_named;
use crate::error::{Error, Result, Stage};
use crate::ingest::{open_source, Decoder, FrameSourceSpec, RawFrame};
use crate::preprocess::preprocess;
use crate::STREAM_FPS;

/// Settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub threshold: f64,
    pub count_mode: CountMode,
    pub backends: Vec<String>,
}

impl ConfigEcho {
    pub fn counter_config(&self) -> CounterConfig {
        CounterConfig {
            threshold: self.threshold,
            mode: self.count_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub counts: ActionCounts,
    pub per_frame: Vec<FramePrediction>,
    pub config_echo: ConfigEcho,
    /// SHA-256 of the input bytes, hex encoded.
    pub input_digest: String,
}

impl AnalysisReport {
    /// Recounts `per_frame` under the echoed configuration.
    pub fn recount(&self) -> ActionCounts {
        let cfg = self.config_echo.counter_config();
        count_events(&gate(&self.per_frame, &cfg), &cfg).final_counts
    }

    pub fn is_consistent(&self) -> bool {
        self.recount() == self.counts
    }

    /// Whether each frame in `per_frame` was counted as an event.
    pub fn counted_flags(&self) -> Vec<bool> {
        let mut counter = EventCounter::new(self.config_echo.count_mode);
        self.per_frame
            .iter()
            .map(|f| f.gated && counter.push(f.frame_index, f.label).counted)
            .collect()
    }

    pub fn gated_frames(&self) -> impl Iterator<Item = &FramePrediction> {
        self.per_frame.iter().filter(|f| f.gated)
    }
}

/// One finished frame handed to a streaming consumer.
#[derive(Debug)]
pub struct FrameRow<'a> {
    pub prediction: &'a FramePrediction,
    pub counted: bool,
    pub frame: &'a RawFrame,
}

pub struct Analyzer {
    backends: Vec<Arc<dyn Classifier>>,
    cfg: CounterConfig,
    decoder: Decoder,
}

impl std::fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analyzer")
            .field("backends", &self.backend_names())
            .field("cfg", &self.cfg)
            .field("decoder", &self.decoder)
            .finish()
    }
}

impl Analyzer {
    pub fn new(backends: Vec<Arc<dyn Classifier>>, cfg: CounterConfig) -> Result<Self> {
        if backends.is_empty() {
            return Err(Error::invalid("at least one backend is required"));
        }
        cfg.validate()?;
        Ok(Analyzer {
            backends,
            cfg,
            decoder: Decoder::resolve(None),
        })
    }

    pub fn with_decoder(mut self, decoder: Decoder) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn config(&self) -> &CounterConfig {
        &self.cfg
    }

    pub fn backend_names(&self) -> Vec<String> {
        self.backends.iter().map(|b| b.name().to_string()).collect()
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            threshold: self.cfg.threshold,
            count_mode: self.cfg.mode,
            backends: self.backend_names(),
        }
    }

    /// Classifies one sampled frame with every backend and votes.
    pub fn predict_frame(&self, frame: &RawFrame) -> Result<FramePrediction> {
        let idx = Some(frame.frame_index);
        let input = preprocess(frame).map_err(|e| e.at(Stage::Preprocess, idx))?;
        let per_model = self
            .backends
            .iter()
            .map(|b| {
                Ok(ModelVote {
                    model: b.name().to_string(),
                    probabilities: b.classify(&input)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at(Stage::Classify, idx))?;
        let record = majority_vote_named(&per_model).map_err(|e| e.at(Stage::Ensemble, idx))?;
        let mut prediction = FramePrediction::new(
            frame.frame_index,
            frame.frame_index as f64 / f64::from(STREAM_FPS),
            per_model,
            record.ensemble,
            self.cfg.threshold,
        );
        // the hard-vote winner is the frame's label; with a plurality it can
        // differ from the mean vector's argmax
        prediction.label = record.winner;
        Ok(prediction)
    }

    pub fn analyze(&self, source: &FrameSourceSpec) -> Result<AnalysisReport> {
        self.analyze_streaming(source, |_| Ok(()))
    }

    /// Runs the pipeline, calling `on_row` for each sampled frame in order.
    pub fn analyze_streaming<F>(&self, source: &FrameSourceSpec, on_row: F) -> Result<AnalysisReport>
    where
        F: FnMut(&FrameRow<'_>) -> Result<()>,
    {
        let opened = open_source(source, &self.decoder).map_err(|e| e.at(Stage::Ingest, None))?;
        let frames = opened.sampled().into_iter().map(|r| {
            let idx = r.frame_index;
            r.load().map_err(|e| e.at(Stage::Ingest, Some(idx)))
        });
        self.analyze_frames(frames, opened.input_digest.clone(), on_row)
    }

    /// Runs the pipeline over already-sampled frames.
    pub fn analyze_frames<I, F>(&self, frames: I, input_digest: String, mut on_row: F) -> Result<AnalysisReport>
    where
        I: IntoIterator<Item = Result<RawFrame>>,
        F: FnMut(&FrameRow<'_>) -> Result<()>,
    {
        let mut counter = EventCounter::new(self.cfg.mode);
        let mut per_frame = Vec::new();
        for frame in frames {
            let frame = frame?;
            let prediction = self.predict_frame(&frame)?;
            let counted = prediction.gated && counter.push(prediction.frame_index, prediction.label).counted;
            on_row(&FrameRow {
                prediction: &prediction,
                counted,
                frame: &frame,
            })
            .map_err(|e| e.at(Stage::Report, Some(prediction.frame_index)))?;
            per_frame.push(prediction);
        }
        Ok(AnalysisReport {
            counts: counter.into_counts(),
            per_frame,
            config_echo: self.echo(),
            input_digest,
        })
    }
}
