//! Builds a labelled dataset from gated predictions and splits it.

use fragc::backend::mock_ensemble;
use fragc::counter::CounterConfig;
use fragc::dataset::{split_dataset, DatasetWriter};
use fragc::demo::{write_demo_frames, DEMO_LABELS};
use fragc::domain::ActionClass;
use fragc::ingest::FrameSourceSpec;
use fragc::pipeline::Analyzer;

fn main() -> fragc::Result<()> {
    let tmp = tempfile::tempdir().map_err(|e| fragc::Error::io("<tempdir>", e))?;
    let frames = tmp.path().join("frames");
    // three passes over the demo so every class has a few members
    let labels: Vec<ActionClass> = DEMO_LABELS.iter().cycle().take(27).copied().collect();
    write_demo_frames(&frames, &labels)?;

    let out = tmp.path().join("dataset");
    let mut writer = DatasetWriter::create(&out)?;
    let analyzer = Analyzer::new(mock_ensemble(5), CounterConfig::default())?;
    let report = analyzer.analyze_streaming(&FrameSourceSpec::frame_directory(&frames, 30)?, |row| {
        writer.add(row.frame, row.prediction).map(|_| ())
    })?;
    let manifest = writer.finish(&report.input_digest)?;
    for class in ActionClass::ALL {
        println!("{:>8}: {} frames", class.name(), manifest.count(class));
    }

    let split = split_dataset(&manifest, [0.7, 0.15, 0.15], 42)?;
    println!(
        "train {} / test {} / validation {}",
        split.train.entries.len(),
        split.test.entries.len(),
        split.validation.entries.len()
    );
    Ok(())
}
