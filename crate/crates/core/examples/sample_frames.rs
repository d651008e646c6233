//! Frame-rate normalization to 30 fps and one-per-second sampling.

use fragc::ingest::{normalize_fps, resampled_len, sample_frames, FrameRef};

fn main() -> fragc::Result<()> {
    for fps in [15, 24, 30, 60] {
        let source: Vec<u64> = (0..fps as u64 * 2).collect();
        let stream = normalize_fps(&source, fps)?;
        println!(
            "{fps:>2} fps, 2 s: {} source frames -> {} stream frames (len {}), first 8 {:?}",
            source.len(),
            stream.len(),
            resampled_len(source.len() as u64, fps),
            &stream[..8]
        );
    }

    let stream = (0..95).map(|i| FrameRef {
        frame_index: i,
        path: format!("frame_{i:06}.png").into(),
    });
    let kept: Vec<u64> = sample_frames(stream).iter().map(|f| f.frame_index).collect();
    println!("95 frames sampled at {kept:?}");
    Ok(())
}
