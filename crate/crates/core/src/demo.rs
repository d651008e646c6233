//! Synthetic inputs for demo mode and tests.
//!
//! A demo "video" is a 30 fps frame directory where every second is a uniform
//! frame whose brightness the mock backend reads as the wanted class.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::backend::MockClassifier;
use crate::domain::ActionClass;
use crate::error::{Error, Result};
use crate::ingest::frame_file_name;
use crate::STREAM_FPS;

use ActionClass::{Death as D, Kill as K, NoAction as NA};

/// Nine seconds: kill, death, no-action, then alternating kill/death.
pub const DEMO_LABELS: [ActionClass; 9] = [K, D, NA, K, D, K, D, K, D];

/// Eleven gated frames, six kills and five deaths, that reduce to five kills
/// and four deaths after duplicate suppression.
pub const KILL_DEATH_SCENARIO: [ActionClass; 11] = [K, D, D, K, D, K, D, K, D, K, K];

pub const DEMO_WIDTH: u32 = 128;
pub const DEMO_HEIGHT: u32 = 72;

pub fn demo_frame(class: ActionClass) -> RgbImage {
    let v = MockClassifier::brightness_for(class);
    RgbImage::from_pixel(DEMO_WIDTH, DEMO_HEIGHT, Rgb([v, v, v]))
}

/// Writes `labels.len()` seconds of 30 fps frames into `dir` as
/// `frame_<index>.png`. Returns the number of frames written.
pub fn write_demo_frames(dir: &Path, labels: &[ActionClass]) -> Result<usize> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = 0u64;
    for &class in labels {
        let img = demo_frame(class);
        for _ in 0..STREAM_FPS {
            let path = dir.join(frame_file_name("frame", index));
            img.save(&path).map_err(|source| Error::Image { path, source })?;
            index += 1;
        }
    }
    Ok(index as usize)
}

/// Packs the PNG frames of `dir` into an uncompressed tar archive, the frame
/// archive format accepted by the HTTP service.
pub fn frame_archive(dir: &Path) -> Result<Vec<u8>> {
    let files = crate::ingest::list_frame_directory(dir)?;
    let mut builder = tar::Builder::new(Vec::new());
    builder.mode(tar::HeaderMode::Deterministic);
    for path in files {
        let name = path.file_name().expect("listed files have names");
        builder
            .append_path_with_name(&path, name)
            .map_err(|e| Error::io(&path, e))?;
    }
    let mut out = builder.into_inner().map_err(|e| Error::io(dir, e))?;
    out.flush().map_err(|e| Error::io(dir, e))?;
    Ok(out)
}
