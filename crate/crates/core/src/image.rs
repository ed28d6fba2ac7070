//! Pixel containers and the few image operations the pipeline needs.
//!
//! Luminance images are `f32` in `[0, 1]`, camera frames are packed 8-bit RGB
//! and depth frames carry raw millimeters with 0 marking an invalid reading.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Default upper bound on trusted depth readings, in millimeters.
pub const DEFAULT_MAX_RANGE_MM: u16 = 10_000;

fn check_len(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 || len != width * height * channels {
        return Err(Error::BadDimensions { width, height, len });
    }
    Ok(())
}

/// Row-major luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, data.len(), 1)?;
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig("gray values must be finite and within [0, 1]"));
        }
        Ok(Self { width, height, data })
    }

    /// Uniform image, mostly useful in tests.
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        let value = value.clamp(0.0, 1.0);
        Self { width, height, data: alloc::vec![value; width * height] }
    }

    /// Builds an image from a per-pixel function; outputs are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                data.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }
}

/// Row-major packed 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, data.len(), 3)?;
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Row-major depth image in millimeters; 0 marks a missing reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
    max_range_mm: u16,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        check_len(width, height, data.len(), 1)?;
        Ok(Self { width, height, data, max_range_mm: DEFAULT_MAX_RANGE_MM })
    }

    pub fn with_max_range(mut self, max_range_mm: u16) -> Self {
        self.max_range_mm = max_range_mm;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn max_range_mm(&self) -> u16 {
        self.max_range_mm
    }

    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// A reading is usable when it is non-zero and within the trusted range.
    #[inline]
    pub fn is_valid(&self, value: u16) -> bool {
        value != 0 && value <= self.max_range_mm
    }
}

/// Half-open row range `[row_start, row_end)` spanning the full image width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropMask {
    pub row_start: usize,
    pub row_end: usize,
}

impl CropMask {
    pub fn new(row_start: usize, row_end: usize) -> Self {
        Self { row_start, row_end }
    }

    pub fn full(height: usize) -> Self {
        Self { row_start: 0, row_end: height }
    }

    pub fn rows(&self) -> usize {
        self.row_end.saturating_sub(self.row_start)
    }

    pub fn validate(&self, height: usize) -> Result<()> {
        if self.row_start >= self.row_end || self.row_end > height {
            return Err(Error::InvalidMask {
                row_start: self.row_start,
                row_end: self.row_end,
                height,
            });
        }
        Ok(())
    }
}

/// BT.601 luma, scaled to `[0, 1]`.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f32::from(p[0]) + 0.587 * f32::from(p[1]) + 0.114 * f32::from(p[2]);
            (y / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage { width: img.width, height: img.height, data }
}

/// Images that can be cut to a horizontal band of rows.
pub trait CropRows: Sized {
    fn crop_rows(&self, mask: CropMask) -> Result<Self>;
}

impl CropRows for GrayImage {
    fn crop_rows(&self, mask: CropMask) -> Result<Self> {
        mask.validate(self.height)?;
        let data = self.data[mask.row_start * self.width..mask.row_end * self.width].to_vec();
        Ok(GrayImage { width: self.width, height: mask.rows(), data })
    }
}

impl CropRows for DepthImage {
    fn crop_rows(&self, mask: CropMask) -> Result<Self> {
        mask.validate(self.height)?;
        let data = self.data[mask.row_start * self.width..mask.row_end * self.width].to_vec();
        Ok(DepthImage { width: self.width, height: mask.rows(), data, max_range_mm: self.max_range_mm })
    }
}

impl CropRows for RgbImage {
    fn crop_rows(&self, mask: CropMask) -> Result<Self> {
        mask.validate(self.height)?;
        let w3 = 3 * self.width;
        let data = self.data[mask.row_start * w3..mask.row_end * w3].to_vec();
        Ok(RgbImage { width: self.width, height: mask.rows(), data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn gray_of(r: u8, g: u8, b: u8) -> f32 {
        rgb_to_gray(&RgbImage::new(1, 1, vec![r, g, b]).unwrap()).data()[0]
    }

    #[test]
    fn luma_reference_colors() {
        assert_eq!(gray_of(255, 255, 255), 1.0);
        assert_eq!(gray_of(0, 0, 0), 0.0);
        assert!((gray_of(255, 0, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn crop_identity_and_bottom_half() {
        let img = GrayImage::from_fn(640, 480, |x, y| ((x + 3 * y) % 256) as f32 / 255.0);
        assert_eq!(img.crop_rows(CropMask::full(480)).unwrap(), img);

        let half = img.crop_rows(CropMask::new(240, 480)).unwrap();
        assert_eq!((half.width(), half.height()), (640, 240));
        assert_eq!(half.row(0), img.row(240));
        assert_eq!(half.row(239), img.row(479));
    }

    #[test]
    fn empty_or_out_of_range_mask_rejected() {
        let img = GrayImage::filled(640, 480, 0.5);
        assert!(matches!(img.crop_rows(CropMask::new(480, 480)), Err(Error::InvalidMask { .. })));
        assert!(matches!(img.crop_rows(CropMask::new(10, 481)), Err(Error::InvalidMask { .. })));
        assert!(matches!(img.crop_rows(CropMask::new(20, 10)), Err(Error::InvalidMask { .. })));
    }

    #[test]
    fn depth_crop_is_bit_exact() {
        let depth = DepthImage::new(4, 3, (0..12u16).map(|v| v * 1000 + 7).collect()).unwrap();
        let c = depth.crop_rows(CropMask::new(1, 3)).unwrap();
        assert_eq!(c.data(), &depth.data()[4..]);
    }

    #[test]
    fn gray_rejects_out_of_range() {
        assert!(GrayImage::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0, f32::NAN]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn luma_stays_in_unit_range(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
            let v = gray_of(r, g, b);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn nested_crops_compose(a in 0usize..40, len in 1usize..40, c_frac in 0.0f64..1.0) {
            let height = 80;
            let b = (a + len).min(height);
            prop_assume!(a < b);
            let c = ((c_frac * (b - a) as f64) as usize).max(1);
            let img = DepthImage::new(3, height, (0..3 * height as u16).collect()).unwrap();
            let nested = img
                .crop_rows(CropMask::new(a, b))
                .unwrap()
                .crop_rows(CropMask::new(0, c))
                .unwrap();
            prop_assert_eq!(nested, img.crop_rows(CropMask::new(a, a + c)).unwrap());
        }
    }
}
