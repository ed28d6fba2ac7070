//! PNG/PNM frames: 8-bit RGB colour, 16-bit grayscale depth in millimetres.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use rowexit_core::image::{DepthImage, RgbImage};
use rowexit_core::Error as CoreError;

use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = image::ImageReader::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| CliError::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(e) => CliError::io(path, e),
        e => CliError::Decode { path: path.into(), reason: e.to_string() },
    })
}

fn encode_err(path: &Path, e: image::ImageError) -> CliError {
    match e {
        image::ImageError::IoError(e) => CliError::io(path, e),
        e => CliError::Decode { path: path.into(), reason: e.to_string() },
    }
}

/// Any decodable image, converted to RGB. Gray inputs are replicated.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(RgbImage::new(w, h, img.into_raw())?)
}

/// A single-channel 16-bit image; each value is a depth in mm, 0 = invalid.
pub fn load_depth(path: &Path) -> Result<DepthImage> {
    match open(path)? {
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            Ok(DepthImage::new(w, h, img.into_raw())?)
        }
        other => Err(CliError::Decode {
            path: path.into(),
            reason: format!("depth must be 16-bit grayscale, found {:?}", other.color()),
        }),
    }
}

/// Loads a colour frame and its registered depth frame, which must share a size.
pub fn load_rgb_depth_pair(rgb_path: &Path, depth_path: &Path) -> Result<(RgbImage, DepthImage)> {
    let rgb = load_rgb(rgb_path)?;
    let depth = load_depth(depth_path)?;
    if (rgb.width(), rgb.height()) != (depth.width(), depth.height()) {
        return Err(CliError::Pipeline(CoreError::DimensionMismatch {
            expected: (rgb.width(), rgb.height()),
            actual: (depth.width(), depth.height()),
        }));
    }
    Ok((rgb, depth))
}

pub fn save_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data()).expect("sized by RgbImage");
    buf.save(path).map_err(|e| encode_err(path, e))
}

pub fn save_depth(path: &Path, img: &DepthImage) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, _> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data()).expect("sized by DepthImage");
    buf.save(path).map_err(|e| encode_err(path, e))
}
