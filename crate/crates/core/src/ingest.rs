//! Turning a video file or a frame directory into an ordered stream of
//! sampled frames, one per second of footage.
//!
//! Frame directories follow the `<stem>_<index>.png` convention with a
//! zero-padded six digit index. Video files are first handed to an external
//! decoder which writes such a directory at 30 fps.

use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::DynamicImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::STREAM_FPS;

/// Environment variable naming the decoder binary.
pub const DECODER_ENV: &str = "FRAGC_DECODER";
const DEFAULT_DECODER: &str = "ffmpeg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    VideoFile,
    FrameDirectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSourceSpec {
    pub kind: SourceKind,
    pub path: PathBuf,
    pub declared_fps: u32,
}

impl FrameSourceSpec {
    pub fn frame_directory(path: impl Into<PathBuf>, declared_fps: u32) -> Result<Self> {
        Self::new(SourceKind::FrameDirectory, path.into(), declared_fps)
    }

    pub fn video_file(path: impl Into<PathBuf>) -> Result<Self> {
        Self::new(SourceKind::VideoFile, path.into(), STREAM_FPS)
    }

    /// Picks the kind from what is on disk. `fps` only matters for frame
    /// directories; non-integer rates such as 29.97 are rounded.
    pub fn detect(path: impl Into<PathBuf>, fps: f64) -> Result<Self> {
        let path = path.into();
        let meta = fs::metadata(&path).map_err(|e| Error::io(&path, e))?;
        if meta.is_dir() {
            Self::frame_directory(path, round_fps(fps)?)
        } else {
            Self::video_file(path)
        }
    }

    fn new(kind: SourceKind, path: PathBuf, declared_fps: u32) -> Result<Self> {
        if declared_fps == 0 {
            return Err(Error::invalid("declared fps must be at least 1"));
        }
        Ok(FrameSourceSpec {
            kind,
            path,
            declared_fps,
        })
    }
}

/// Rounds a possibly fractional frame rate to the nearest integer.
pub fn round_fps(fps: f64) -> Result<u32> {
    if !fps.is_finite() || fps <= 0.0 {
        return Err(Error::invalid(format!("fps must be positive, got {fps}")));
    }
    let rounded = fps.round();
    if rounded < 1.0 || rounded > f64::from(u32::MAX) {
        return Err(Error::invalid(format!("fps {fps} out of range")));
    }
    Ok(rounded as u32)
}

/// Anything that carries a position in the normalized 30 fps stream.
pub trait StreamIndexed {
    fn frame_index(&self) -> u64;
}

/// A decoded frame.
#[derive(Debug, Clone)]
pub struct RawFrame {
    pub frame_index: u64,
    pub pixels: DynamicImage,
}

impl RawFrame {
    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }
}

impl StreamIndexed for RawFrame {
    fn frame_index(&self) -> u64 {
        self.frame_index
    }
}

/// A not-yet-decoded frame in the normalized stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRef {
    pub frame_index: u64,
    pub path: PathBuf,
}

impl FrameRef {
    pub fn load(&self) -> Result<RawFrame> {
        let pixels = image::open(&self.path).map_err(|source| Error::Image {
            path: self.path.clone(),
            source,
        })?;
        Ok(RawFrame {
            frame_index: self.frame_index,
            pixels,
        })
    }
}

impl StreamIndexed for FrameRef {
    fn frame_index(&self) -> u64 {
        self.frame_index
    }
}

/// Source-frame index shown at position `k` of the 30 fps output when the
/// input runs at `source_fps` (sample and hold).
pub fn resample_index(k: u64, source_fps: u32) -> u64 {
    k * u64::from(source_fps) / u64::from(STREAM_FPS)
}

/// Length of the 30 fps stream covering `n` frames recorded at `source_fps`.
pub fn resampled_len(n: u64, source_fps: u32) -> u64 {
    let fps = u64::from(source_fps);
    (n * u64::from(STREAM_FPS)).div_ceil(fps)
}

/// Resamples any ordered sequence to 30 fps with nearest-neighbour timing:
/// frames are repeated when upsampling and dropped when downsampling. A
/// 30 fps input is passed through untouched.
pub fn normalize_fps<T: Clone>(frames: &[T], source_fps: u32) -> Result<Vec<T>> {
    if source_fps == 0 {
        return Err(Error::invalid("source fps must be at least 1"));
    }
    if source_fps == STREAM_FPS {
        return Ok(frames.to_vec());
    }
    let out_len = resampled_len(frames.len() as u64, source_fps);
    Ok((0..out_len)
        .map(|k| frames[resample_index(k, source_fps) as usize].clone())
        .collect())
}

/// Keeps the frames whose stream index is a multiple of 30, in order.
pub fn sample_frames<T, I>(stream: I) -> Vec<T>
where
    T: StreamIndexed,
    I: IntoIterator<Item = T>,
{
    stream
        .into_iter()
        .filter(|f| f.frame_index() % u64::from(STREAM_FPS) == 0)
        .collect()
}

/// Lists a frame directory in index order.
pub fn list_frame_directory(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut indexed = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(index) = frame_file_index(&path) else {
            log::debug!("skipping {} (not a <stem>_<index>.png frame)", path.display());
            continue;
        };
        indexed.push((index, path));
    }
    indexed.sort();
    if let Some(w) = indexed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!(
            "duplicate frame index {} in {}",
            w[0].0,
            dir.display()
        )));
    }
    Ok(indexed.into_iter().map(|(_, p)| p).collect())
}

/// Parses the numeric index out of `<stem>_<index>.png`.
pub fn frame_file_index(path: &Path) -> Option<u64> {
    let ext = path.extension()?.to_str()?;
    if !ext.eq_ignore_ascii_case("png") {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let (_, digits) = stem.rsplit_once('_')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// File name for frame `index` under the directory convention.
pub fn frame_file_name(stem: &str, index: u64) -> String {
    format!("{stem}_{index:06}.png")
}

/// External video decoder. Invoked as
/// `<program> -hide_banner -loglevel error -i <input> -vf fps=30 -start_number 0 <dir>/frame_%06d.png`,
/// which is ffmpeg's command line; any replacement must honour the same
/// arguments and output naming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    program: OsString,
}

impl Decoder {
    pub fn new(program: impl Into<OsString>) -> Self {
        Decoder {
            program: program.into(),
        }
    }

    /// Explicit program if given, else `FRAGC_DECODER`, else `ffmpeg`.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        match explicit {
            Some(p) => Decoder::new(p),
            None => std::env::var_os(DECODER_ENV)
                .map(Decoder::new)
                .unwrap_or_else(|| Decoder::new(DEFAULT_DECODER)),
        }
    }

    pub fn program(&self) -> &std::ffi::OsStr {
        &self.program
    }

    /// Decodes `input` into `out_dir` at 30 fps.
    pub fn decode(&self, input: &Path, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let pattern = out_dir.join("frame_%06d.png");
        let output = Command::new(&self.program)
            .args(["-hide_banner", "-loglevel", "error", "-i"])
            .arg(input)
            .args(["-vf", &format!("fps={STREAM_FPS}"), "-start_number", "0"])
            .arg(&pattern)
            .output()
            // not being able to start the decoder is a deployment problem,
            // not a bad input
            .map_err(|e| Error::io(Path::new(&self.program), e))?;
        if !output.status.success() {
            return Err(Error::Decoder(format!(
                "{} exited with {}: {}",
                Path::new(&self.program).display(),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(())
    }
}

/// An opened source: the normalized 30 fps stream of frame references plus a
/// digest of the input bytes. Holds the decoder's scratch directory alive.
#[derive(Debug)]
pub struct OpenedSource {
    pub spec: FrameSourceSpec,
    pub stream: Vec<FrameRef>,
    pub input_digest: String,
    _scratch: Option<tempfile::TempDir>,
}

impl OpenedSource {
    /// The one-per-second frames that go to the classifiers.
    pub fn sampled(&self) -> Vec<FrameRef> {
        sample_frames(self.stream.iter().cloned())
    }
}

/// Opens a source: decodes video if needed, lists frames and builds the
/// normalized stream.
pub fn open_source(spec: &FrameSourceSpec, decoder: &Decoder) -> Result<OpenedSource> {
    let (frame_dir, fps, scratch, input_digest) = match spec.kind {
        SourceKind::FrameDirectory => {
            let files = list_frame_directory(&spec.path)?;
            let digest = digest_files(&files)?;
            (spec.path.clone(), spec.declared_fps, None, digest)
        }
        SourceKind::VideoFile => {
            let digest = digest_files(std::slice::from_ref(&spec.path))?;
            let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            decoder.decode(&spec.path, scratch.path())?;
            (scratch.path().to_path_buf(), STREAM_FPS, Some(scratch), digest)
        }
    };
    let files = list_frame_directory(&frame_dir)?;
    let stream = normalize_fps(&files, fps)?
        .into_iter()
        .enumerate()
        .map(|(i, path)| FrameRef {
            frame_index: i as u64,
            path,
        })
        .collect();
    Ok(OpenedSource {
        spec: spec.clone(),
        stream,
        input_digest,
        _scratch: scratch,
    })
}

/// SHA-256 over each file's name and bytes, in order.
pub fn digest_files(files: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = Vec::new();
    for path in files {
        if let Some(name) = path.file_name() {
            hasher.update(name.as_encoded_bytes());
        }
        hasher.update([0u8]);
        buf.clear();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        hasher.update((buf.len() as u64).to_le_bytes());
        hasher.update(&buf);
    }
    Ok(hex::encode(hasher.finalize()))
}
