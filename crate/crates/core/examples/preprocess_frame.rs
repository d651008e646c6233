//! Resizes a frame to 224x224, scales it to [0, 1] and shows each backend
//! input scaling.

use image::{DynamicImage, Rgb, RgbImage};

use fragc::ingest::RawFrame;
use fragc::preprocess::{preprocess, InputScaling, INPUT_SIZE};

fn main() -> fragc::Result<()> {
    let img = RgbImage::from_fn(640, 360, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, 128]));
    let frame = RawFrame {
        frame_index: 30,
        pixels: DynamicImage::ImageRgb8(img),
    };
    let input = preprocess(&frame)?;
    println!(
        "640x360 -> {INPUT_SIZE}x{INPUT_SIZE}x3, {} values, mean {:.4}",
        input.values().len(),
        input.mean()
    );
    for scaling in [InputScaling::Unit, InputScaling::Symmetric, InputScaling::CaffeBgr] {
        let t = scaling.apply(&input);
        println!("{scaling:?}: first pixel {:?}", &t[..3]);
    }
    Ok(())
}
