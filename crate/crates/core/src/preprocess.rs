//! Frame preprocessing: bilinear resize to 224x224 followed by scaling bytes
//! into `[0, 1]`.
//!
//! Aspect ratio is not preserved; a 1280x720 frame is stretched to a square.

use image::{DynamicImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RawFrame;

/// Side length of the square model input.
pub const INPUT_SIZE: u32 = 224;
pub const INPUT_CHANNELS: usize = 3;
pub const INPUT_LEN: usize = (INPUT_SIZE * INPUT_SIZE) as usize * INPUT_CHANNELS;

/// A 224x224x3 grid of values in `[0, 1]`, row-major, channels last (HWC).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    values: Vec<f64>,
    pub source_frame_index: u64,
}

impl ModelInput {
    pub fn new(values: Vec<f64>, source_frame_index: u64) -> Result<Self> {
        if values.len() != INPUT_LEN {
            return Err(Error::invalid(format!(
                "model input has {} values, expected {INPUT_LEN} (224x224x3)",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("model input value {v} outside [0,1]")));
        }
        Ok(ModelInput {
            values,
            source_frame_index,
        })
    }

    /// Input with every value set to `v`.
    pub fn filled(v: f64) -> Result<Self> {
        Self::new(vec![v; INPUT_LEN], 0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Little-endian f64 bytes of the values, for hashing and byte-level
    /// comparisons.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

/// Extra canonical transform a backend expects on top of `[0, 1]` scaling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScaling {
    /// Feed `[0, 1]` values as-is.
    #[default]
    Unit,
    /// Map to `[-1, 1]` (`2x - 1`), as Inception/Xception-family models expect.
    Symmetric,
    /// Caffe convention used by VGG16: BGR order, 0..255 range, ImageNet
    /// channel means subtracted.
    CaffeBgr,
}

const CAFFE_BGR_MEAN: [f32; 3] = [103.939, 116.779, 123.68];

impl InputScaling {
    /// Produces the NHWC f32 tensor data for a model.
    pub fn apply(self, input: &ModelInput) -> Vec<f32> {
        match self {
            InputScaling::Unit => input.values.iter().map(|&v| v as f32).collect(),
            InputScaling::Symmetric => input
                .values
                .iter()
                .map(|&v| (2.0 * v - 1.0) as f32)
                .collect(),
            InputScaling::CaffeBgr => input
                .values
                .chunks_exact(INPUT_CHANNELS)
                .flat_map(|px| {
                    let [r, g, b] = [px[0], px[1], px[2]].map(|v| (v * 255.0) as f32);
                    [b - CAFFE_BGR_MEAN[0], g - CAFFE_BGR_MEAN[1], r - CAFFE_BGR_MEAN[2]]
                })
                .collect(),
        }
    }
}

fn as_rgb8(image: &DynamicImage) -> Result<&RgbImage> {
    image.as_rgb8().ok_or_else(|| {
        Error::invalid(format!(
            "expected an 8-bit 3-channel image, got {:?}",
            image.color()
        ))
    })
}

/// Bilinear resize of a frame to 224x224.
pub fn resize(frame: &RawFrame) -> Result<RgbImage> {
    let rgb = as_rgb8(&frame.pixels)?;
    if rgb.width() == 0 || rgb.height() == 0 {
        return Err(Error::invalid("frame has no pixels"));
    }
    Ok(resize_bilinear(rgb, INPUT_SIZE, INPUT_SIZE))
}

/// Bilinear interpolation with pixel-centre alignment and edge clamping.
pub fn resize_bilinear(src: &RgbImage, width: u32, height: u32) -> RgbImage {
    if src.dimensions() == (width, height) {
        return src.clone();
    }
    let (sw, sh) = src.dimensions();
    let xs: Vec<(u32, u32, f64)> = (0..width).map(|x| axis_taps(x, sw, width)).collect();
    let ys: Vec<(u32, u32, f64)> = (0..height).map(|y| axis_taps(y, sh, height)).collect();

    let mut out = RgbImage::new(width, height);
    for (y, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (x, &(x0, x1, fx)) in xs.iter().enumerate() {
            let p00 = src.get_pixel(x0, y0);
            let p10 = src.get_pixel(x1, y0);
            let p01 = src.get_pixel(x0, y1);
            let p11 = src.get_pixel(x1, y1);
            let px = out.get_pixel_mut(x as u32, y as u32);
            for c in 0..3 {
                let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
                let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                px[c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

fn axis_taps(dst: u32, src_len: u32, dst_len: u32) -> (u32, u32, f64) {
    let scale = f64::from(src_len) / f64::from(dst_len);
    let pos = ((f64::from(dst) + 0.5) * scale - 0.5).clamp(0.0, f64::from(src_len - 1));
    let i0 = pos.floor() as u32;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, pos - f64::from(i0))
}

/// Divides every byte by 255.
pub fn normalize_pixels(image: &RgbImage, source_frame_index: u64) -> Result<ModelInput> {
    if image.dimensions() != (INPUT_SIZE, INPUT_SIZE) {
        return Err(Error::invalid(format!(
            "expected a 224x224 image, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let values = image.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(ModelInput {
        values,
        source_frame_index,
    })
}

/// Resize then normalize.
pub fn preprocess(frame: &RawFrame) -> Result<ModelInput> {
    let resized = resize(frame)?;
    normalize_pixels(&resized, frame.frame_index)
}
