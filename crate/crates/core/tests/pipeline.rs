mod common;

use std::path::Path;

use fragc::backend::{mock_ensemble, MockClassifier};
use fragc::counter::{CountMode, CounterConfig};
use fragc::dataset::{collect_dataset, DatasetManifest, MANIFEST_FILE};
use fragc::demo::{write_demo_frames, DEMO_LABELS, KILL_DEATH_SCENARIO};
use fragc::domain::{ActionClass, ActionCounts};
use fragc::ingest::{Decoder, FrameSourceSpec, RawFrame};
use fragc::pipeline::Analyzer;
use fragc::report::{csv_string, parse_csv, counts_from_rows};
use fragc::{Error, Stage};

use ActionClass::{Death as D, Kill as K};

fn analyzer() -> Analyzer {
    Analyzer::new(mock_ensemble(5), CounterConfig::default()).unwrap()
}

fn fake_decoder() -> Decoder {
    Decoder::new(common::fixtures().join("bin/fake-decoder.sh"))
}

fn fake_video(dir: &Path, frames: &Path) -> std::path::PathBuf {
    let path = dir.join("clip.mp4");
    std::fs::write(&path, frames.to_str().unwrap()).unwrap();
    path
}

fn kd(k: u64, d: u64) -> ActionCounts {
    ActionCounts::from_pairs([(K, k), (D, d)].into_iter().filter(|p| p.1 > 0)).unwrap()
}

#[test]
fn demo_directory_counts_and_report_invariants() {
    let (dir, _) = common::demo_fixture();
    let report = analyzer()
        .analyze(&FrameSourceSpec::frame_directory(dir.path(), 30).unwrap())
        .unwrap();
    assert_eq!(report.counts, kd(4, 4));
    assert_eq!(report.per_frame.len(), DEMO_LABELS.len());
    assert!(report.is_consistent());
    for (pred, want) in report.per_frame.iter().zip(DEMO_LABELS) {
        assert_eq!(pred.label, want);
        assert_eq!(pred.frame_index % 30, 0);
        assert_eq!(pred.per_model.len(), 5);
    }
    let rows = parse_csv(csv_string(&report).unwrap().as_bytes()).unwrap();
    assert_eq!(counts_from_rows(&rows).unwrap(), report.counts);
}

#[test]
fn scenario_video_through_decoder() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    write_demo_frames(&frames, &KILL_DEATH_SCENARIO).unwrap();
    let video = fake_video(tmp.path(), &frames);
    let report = analyzer()
        .with_decoder(fake_decoder())
        .analyze(&FrameSourceSpec::video_file(&video).unwrap())
        .unwrap();
    assert_eq!(report.per_frame.len(), 11);
    assert_eq!(report.counts, kd(5, 4));
}

#[test]
fn empty_video_gives_empty_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = tmp.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    let video = fake_video(tmp.path(), &frames);
    let report = analyzer()
        .with_decoder(fake_decoder())
        .analyze(&FrameSourceSpec::video_file(&video).unwrap())
        .unwrap();
    assert!(report.per_frame.is_empty());
    assert!(report.counts.is_empty());
}

#[test]
fn decoder_failure_is_an_ingest_error() {
    let tmp = tempfile::tempdir().unwrap();
    let video = tmp.path().join("clip.mp4");
    std::fs::write(&video, "/nonexistent/frames").unwrap();
    let err = analyzer()
        .with_decoder(fake_decoder())
        .analyze(&FrameSourceSpec::video_file(&video).unwrap())
        .unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Ingest));
}

#[test]
fn corrupt_frame_reports_its_index() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_frames(tmp.path(), &DEMO_LABELS[..2]).unwrap();
    std::fs::write(tmp.path().join("frame_000030.png"), b"garbage").unwrap();
    let err = analyzer()
        .analyze(&FrameSourceSpec::frame_directory(tmp.path(), 30).unwrap())
        .unwrap_err();
    match err {
        Error::Stage { stage, frame_index, .. } => {
            assert_eq!(stage, Stage::Ingest);
            assert_eq!(frame_index, Some(30));
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn sixty_fps_directory_is_resampled() {
    let tmp = tempfile::tempdir().unwrap();
    // 9 s of demo at 30 fps read back as a 60 fps source is 4.5 s long
    write_demo_frames(tmp.path(), &DEMO_LABELS).unwrap();
    let report = analyzer()
        .analyze(&FrameSourceSpec::frame_directory(tmp.path(), 60).unwrap())
        .unwrap();
    assert_eq!(report.per_frame.len(), 5);
    let labels: Vec<_> = report.per_frame.iter().map(|p| p.label).collect();
    assert_eq!(labels, [DEMO_LABELS[0], DEMO_LABELS[2], DEMO_LABELS[4], DEMO_LABELS[6], DEMO_LABELS[8]]);
}

#[test]
fn count_mode_changes_only_the_counts() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_frames(tmp.path(), &[K, K, K]).unwrap();
    let spec = FrameSourceSpec::frame_directory(tmp.path(), 30).unwrap();
    let run = |mode| {
        Analyzer::new(mock_ensemble(3), CounterConfig::default().with_mode(mode))
            .unwrap()
            .analyze(&spec)
            .unwrap()
    };
    let literal = run(CountMode::Literal);
    let collapse = run(CountMode::RunCollapse);
    assert_eq!(literal.counts, kd(2, 0));
    assert_eq!(collapse.counts, kd(1, 0));
    assert_eq!(literal.per_frame, collapse.per_frame);
}

#[test]
fn high_threshold_gates_everything() {
    let (dir, _) = common::demo_fixture();
    let cfg = CounterConfig::new(0.97, CountMode::Literal).unwrap();
    let report = Analyzer::new(mock_ensemble(5), cfg)
        .unwrap()
        .analyze(&FrameSourceSpec::frame_directory(dir.path(), 30).unwrap())
        .unwrap();
    assert!(report.per_frame.iter().all(|p| !p.gated));
    assert!(report.counts.is_empty());
}

#[test]
fn collected_dataset_matches_gated_predictions() {
    let (dir, _) = common::demo_fixture();
    let spec = FrameSourceSpec::frame_directory(dir.path(), 30).unwrap();
    let mut frames: Vec<RawFrame> = Vec::new();
    let report = analyzer()
        .analyze_streaming(&spec, |row| {
            frames.push(row.frame.clone());
            Ok(())
        })
        .unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = collect_dataset(&report, &frames, out.path()).unwrap();

    assert_eq!(manifest.entries.len(), report.gated_frames().count());
    assert_eq!(DatasetManifest::load(&out.path().join(MANIFEST_FILE)).unwrap(), manifest);
    for entry in &manifest.entries {
        let path = out.path().join(&entry.path);
        assert!(path.starts_with(out.path().join(entry.label.name())));
        let img = image::open(&path).unwrap().to_rgb8();
        let v = img.get_pixel(0, 0)[0];
        assert_eq!(MockClassifier::class_for_mean(f64::from(v) / 255.0), entry.label);
    }
    assert_eq!(manifest.count(K), 4);
    assert_eq!(manifest.count(D), 4);
    assert_eq!(manifest.count(ActionClass::NoAction), 1);
}
