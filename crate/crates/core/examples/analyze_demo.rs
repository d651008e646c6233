//! Runs the nine-second synthetic demo through five mock backends.
//!
//! ```text
//! cargo run --example analyze_demo [-- out.csv]
//! ```

use std::io::Write;

use fragc::backend::mock_ensemble;
use fragc::counter::CounterConfig;
use fragc::demo::{write_demo_frames, DEMO_LABELS};
use fragc::ingest::FrameSourceSpec;
use fragc::pipeline::Analyzer;
use fragc::report::csv_string;

fn main() -> fragc::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| fragc::Error::io("<tempdir>", e))?;
    let frames = write_demo_frames(dir.path(), &DEMO_LABELS)?;
    println!("wrote {frames} frames for labels {DEMO_LABELS:?}");

    let analyzer = Analyzer::new(mock_ensemble(5), CounterConfig::default())?;
    let report = analyzer.analyze(&FrameSourceSpec::frame_directory(dir.path(), 30)?)?;
    let csv = csv_string(&report)?;

    match std::env::args().nth(1) {
        Some(path) => std::fs::write(&path, &csv).map_err(|e| fragc::Error::io(&path, e))?,
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| fragc::Error::io("<stdout>", e))?,
    }
    println!("counts: {}", report.counts);
    Ok(())
}
