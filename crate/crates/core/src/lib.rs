//! Frame-level action recognition and event counting for first-person-shooter
//! gameplay video.
//!
//! The pipeline samples one frame per second from a 30 fps stream, classifies
//! each sampled frame with several pluggable classifiers, combines them by
//! majority vote, drops low-confidence frames and turns what is left into
//! deduplicated kill/death/smoke counts.
//!
//! ```text
//! ingest -> preprocess -> backend (xN) -> ensemble -> counter -> report
//! ```
//!
//! Every stage is usable on its own; see the crate's `examples/` directory for
//! one runnable program per capability, e.g.
//!
//! ```bash
//! cargo run -p fragc --example analyze_demo
//! ```

pub mod backend;
pub mod counter;
pub mod dataset;
pub mod demo;
pub mod domain;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod service;

pub use backend::{load_backend, BackendManifest, Classifier, MockClassifier};
pub use counter::{count_events, gate, CountMode, CountTrace, CounterConfig, EventCounter};
pub use domain::{ActionClass, ActionCounts, FramePrediction, OneHotLabel, ProbabilityVector};
pub use ensemble::{majority_vote, VoteRecord};
pub use error::{Error, Result, Stage};
pub use ingest::{FrameSourceSpec, RawFrame, SourceKind};
pub use metrics::{confusion, ConfusionMatrix, EvalReport};
pub use pipeline::{AnalysisReport, Analyzer};
pub use preprocess::ModelInput;

/// Frame rate every input stream is normalized to.
pub const STREAM_FPS: u32 = 30;
