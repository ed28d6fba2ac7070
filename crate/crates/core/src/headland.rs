//! Headland span from one depth frame and the stage-2 crop mask.
//!
//! The median depths of the bottom (near) and top (far) image rows and the
//! vertical field of view form a triangle with the camera; its third side is
//! the ground distance visible in the frame. The mask then selects the bottom
//! part of the image that corresponds to one robot length of ground.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::image::{CropMask, DepthImage};
use crate::{Error, Result};

/// Pinhole camera with square pixels, parameterised by its vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    /// Vertical field of view, radians.
    pub vertical_fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { vertical_fov: 58.0_f64.to_radians(), width: 640, height: 480 }
    }
}

impl CameraIntrinsics {
    pub fn new(vertical_fov: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Self { vertical_fov, width, height };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 0.0 && self.vertical_fov < PI) {
            return Err(Error::InvalidConfig("vertical field of view must be in (0, π)"));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidConfig("camera resolution must be at least 16x16"));
        }
        Ok(())
    }

    /// `(height / 2) / tan(fov / 2)`, in pixels.
    pub fn focal_y(&self) -> f64 {
        (self.height as f64 / 2.0) / libm::tan(self.vertical_fov / 2.0)
    }

    pub fn cx(&self) -> f64 {
        (self.width as f64 - 1.0) / 2.0
    }

    pub fn cy(&self) -> f64 {
        (self.height as f64 - 1.0) / 2.0
    }

    /// Elevation of the ray through row `y` relative to the optical axis; positive is up.
    pub fn row_angle(&self, y: f64) -> f64 {
        libm::atan((self.cy() - y) / self.focal_y())
    }
}

/// Near and far median depths and the ground distance between them, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadlandSpan {
    pub d1: f64,
    pub d2: f64,
    pub d_fov: f64,
    /// Angle between the two rays, radians.
    pub alpha: f64,
    /// Image row the far depth was taken from.
    pub top_row: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotGeometry {
    /// Robot length `l`, meters.
    pub length: f64,
    /// Multiple of the robot length to travel in stage 2.
    pub scale: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self { length: 1.0, scale: 1.0 }
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !(self.scale > 0.0) {
            return Err(Error::InvalidConfig("robot length and scale must be positive"));
        }
        Ok(())
    }

    /// Stage-2 travel distance `L = m · l`.
    pub fn target_distance(&self) -> f64 {
        self.scale * self.length
    }
}

/// How the stage-2 mask maps one robot length of ground onto image rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMapping {
    /// Bottom `l / D_fov` fraction of the rows.
    Linear,
    /// Row whose ray meets the ground `l` beyond the near point, from the span triangle.
    Perspective,
}

fn median(values: &mut [u16]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        f64::from(values[n / 2])
    } else {
        0.5 * (f64::from(values[n / 2 - 1]) + f64::from(values[n / 2]))
    }
}

fn valid_in_row(depth: &DepthImage, row: usize) -> Vec<u16> {
    depth.row(row).iter().copied().filter(|&v| depth.is_valid(v)).collect()
}

fn has_enough_depth(valid: usize, width: usize) -> bool {
    2 * valid >= width
}

/// Median of the valid readings in `row`, in meters.
///
/// At least half the row must be valid (non-zero, within range).
pub fn row_median_depth(depth: &DepthImage, row: usize) -> Result<f64> {
    if row >= depth.height() {
        return Err(Error::InvalidMask { row_start: row, row_end: row + 1, height: depth.height() });
    }
    let mut valid = valid_in_row(depth, row);
    if valid.is_empty() || !has_enough_depth(valid.len(), depth.width()) {
        return Err(Error::InsufficientDepth { row, valid: valid.len(), width: depth.width() });
    }
    Ok(median(&mut valid) / 1000.0)
}

/// Law of cosines, `√(d1² + d2² − 2·d1·d2·cos α)`.
///
/// Evaluated as `√((d1 − d2)² + 4·d1·d2·sin²(α/2))`, which is the same
/// quantity without the cancellation at small angles.
pub fn estimate_dfov(d1: f64, d2: f64, alpha: f64) -> f64 {
    let diff = d1 - d2;
    let s = libm::sin(0.5 * alpha);
    libm::sqrt(diff * diff + 4.0 * d1 * d2 * s * s)
}

/// Span between the bottom row and the highest row with enough valid depth.
pub fn estimate_span(depth: &DepthImage, intr: &CameraIntrinsics) -> Result<HeadlandSpan> {
    intr.validate()?;
    if (depth.width(), depth.height()) != (intr.width, intr.height) {
        return Err(Error::DimensionMismatch {
            expected: (intr.width, intr.height),
            actual: (depth.width(), depth.height()),
        });
    }
    let bottom = intr.height - 1;
    let d1 = row_median_depth(depth, bottom)?;
    let mut top = 0;
    while top < bottom && !has_enough_depth(valid_in_row(depth, top).len(), depth.width()) {
        top += 1;
    }
    if top == bottom {
        return Err(Error::InsufficientDepth { row: 0, valid: 0, width: depth.width() });
    }
    let d2 = row_median_depth(depth, top)?;
    let alpha = if top == 0 {
        intr.vertical_fov
    } else {
        intr.row_angle(top as f64) - intr.row_angle(bottom as f64)
    };
    Ok(HeadlandSpan { d1, d2, d_fov: estimate_dfov(d1, d2, alpha), alpha, top_row: top })
}

fn check_span(span: &HeadlandSpan, robot: &RobotGeometry) -> Result<()> {
    robot.validate()?;
    if !(span.d1 > 0.0 && span.d2 > 0.0 && span.d_fov > 0.0) {
        return Err(Error::InvalidConfig("headland span must be positive"));
    }
    if span.d_fov < robot.length {
        return Err(Error::HeadlandTooShort { d_fov: span.d_fov, length: robot.length });
    }
    Ok(())
}

/// Bottom `l / D_fov` of the image under a linear row-to-ground approximation.
pub fn stage2_mask(span: &HeadlandSpan, robot: &RobotGeometry, height: usize) -> Result<CropMask> {
    check_span(span, robot)?;
    let fraction = (robot.length / span.d_fov).min(1.0);
    let start = libm::floor((1.0 - fraction) * height as f64) as usize;
    Ok(CropMask::new(start.min(height - 1), height))
}

/// Mask whose top row looks at the ground point one robot length beyond the
/// near point, found inside the camera/near/far triangle.
pub fn stage2_mask_perspective(
    span: &HeadlandSpan,
    robot: &RobotGeometry,
    intr: &CameraIntrinsics,
) -> Result<CropMask> {
    check_span(span, robot)?;
    let height = intr.height;
    // Camera at the origin, near point on the x axis, far point at angle alpha.
    let (px, py) = (span.d1, 0.0);
    let (qx, qy) = (span.d2 * libm::cos(span.alpha), span.d2 * libm::sin(span.alpha));
    let t = (robot.length / span.d_fov).min(1.0);
    let (gx, gy) = (px + t * (qx - px), py + t * (qy - py));
    let phi = libm::atan2(gy, gx);

    let bottom_angle = if span.top_row == 0 {
        -intr.vertical_fov / 2.0
    } else {
        intr.row_angle((height - 1) as f64)
    };
    let y = intr.cy() - intr.focal_y() * libm::tan(bottom_angle + phi);
    let start = libm::floor(y + 0.5).clamp(0.0, (height - 1) as f64) as usize;
    Ok(CropMask::new(start, height))
}

pub fn stage2_mask_with(
    mapping: MaskMapping,
    span: &HeadlandSpan,
    robot: &RobotGeometry,
    intr: &CameraIntrinsics,
) -> Result<CropMask> {
    match mapping {
        MaskMapping::Linear => stage2_mask(span, robot, intr.height),
        MaskMapping::Perspective => stage2_mask_perspective(span, robot, intr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn depth_rows(width: usize, rows: &[&[u16]]) -> DepthImage {
        DepthImage::new(width, rows.len(), rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    fn span(d_fov: f64) -> HeadlandSpan {
        HeadlandSpan { d1: 1.0, d2: 3.0, d_fov, alpha: 1.0, top_row: 0 }
    }

    #[test]
    fn median_examples() {
        let d = depth_rows(4, &[&[1200, 0, 1250, 1300]]);
        assert!((row_median_depth(&d, 0).unwrap() - 1.25).abs() < 1e-12);
        let d = depth_rows(2, &[&[1000, 2000]]);
        assert!((row_median_depth(&d, 0).unwrap() - 1.5).abs() < 1e-12);
        let d = depth_rows(3, &[&[0, 0, 0]]);
        assert!(matches!(row_median_depth(&d, 0), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn median_ignores_out_of_range_and_needs_half_valid() {
        let d = depth_rows(4, &[&[900, 20_000, 1100, 0]]);
        assert!((row_median_depth(&d, 0).unwrap() - 1.0).abs() < 1e-12);
        let d = depth_rows(4, &[&[900, 20_000, 0, 0]]);
        assert!(matches!(row_median_depth(&d, 0), Err(Error::InsufficientDepth { valid: 1, .. })));
    }

    #[test]
    fn dfov_examples() {
        let sixty = 60.0f64.to_radians();
        assert!((estimate_dfov(2.0, 2.0, sixty) - 2.0).abs() < 1e-12);
        assert!((estimate_dfov(1.0, 3.0, 0.0) - 2.0).abs() < 1e-15);
        let d = estimate_dfov(1.0, 3.0, 58.0f64.to_radians());
        assert!((d - 2.611606).abs() < 1e-6, "{d}");
        assert_eq!(estimate_dfov(1.7, 1.7, 0.0), 0.0);
    }

    #[test]
    fn mask_examples() {
        let robot = RobotGeometry { length: 1.0, scale: 1.0 };
        let m = stage2_mask(&span(2.611606), &robot, 480).unwrap();
        assert_eq!(m, CropMask::new(296, 480));
        assert_eq!(stage2_mask(&span(1.0), &robot, 480).unwrap(), CropMask::new(0, 480));
        assert!(matches!(stage2_mask(&span(0.8), &robot, 480), Err(Error::HeadlandTooShort { .. })));
        assert!(matches!(
            stage2_mask_perspective(&span(0.8), &robot, &CameraIntrinsics::default()),
            Err(Error::HeadlandTooShort { .. })
        ));
    }

    #[test]
    fn perspective_mask_full_when_span_equals_length() {
        let intr = CameraIntrinsics::default();
        let alpha = intr.vertical_fov;
        let (d1, d2) = (0.8, 1.5);
        let s = HeadlandSpan { d1, d2, d_fov: estimate_dfov(d1, d2, alpha), alpha, top_row: 0 };
        let robot = RobotGeometry { length: s.d_fov, scale: 1.0 };
        assert_eq!(stage2_mask_perspective(&s, &robot, &intr).unwrap(), CropMask::new(0, 480));
    }

    #[test]
    fn span_on_gradient_uses_full_fov() {
        let intr = CameraIntrinsics { width: 16, height: 20, ..Default::default() };
        let data: Vec<u16> = (0..20).flat_map(|y| vec![3000 - 100 * y as u16; 16]).collect();
        let depth = DepthImage::new(16, 20, data).unwrap();
        let s = estimate_span(&depth, &intr).unwrap();
        assert_eq!(s.top_row, 0);
        assert_eq!(s.alpha, intr.vertical_fov);
        assert!((s.d1 - 1.1).abs() < 1e-12 && (s.d2 - 3.0).abs() < 1e-12);
        assert!((s.d_fov - estimate_dfov(1.1, 3.0, intr.vertical_fov)).abs() < 1e-12);
    }

    #[test]
    fn span_falls_back_below_invalid_rows() {
        let intr = CameraIntrinsics { width: 16, height: 20, ..Default::default() };
        let data: Vec<u16> = (0..20u16).flat_map(|y| vec![if y < 5 { 0 } else { 3000 - 100 * y }; 16]).collect();
        let depth = DepthImage::new(16, 20, data).unwrap();
        let s = estimate_span(&depth, &intr).unwrap();
        assert_eq!(s.top_row, 5);
        assert!((s.alpha - (intr.row_angle(5.0) - intr.row_angle(19.0))).abs() < 1e-15);
        assert!(s.alpha < intr.vertical_fov);
    }

    #[test]
    fn span_errors() {
        let intr = CameraIntrinsics { width: 16, height: 20, ..Default::default() };
        let empty = DepthImage::new(16, 20, vec![0; 320]).unwrap();
        assert!(matches!(estimate_span(&empty, &intr), Err(Error::InsufficientDepth { .. })));
        // Only the bottom row is valid.
        let mut data = vec![0u16; 320];
        data[304..].iter_mut().for_each(|v| *v = 900);
        let only_bottom = DepthImage::new(16, 20, data).unwrap();
        assert!(matches!(estimate_span(&only_bottom, &intr), Err(Error::InsufficientDepth { .. })));
        let wrong = DepthImage::new(16, 16, vec![1000; 256]).unwrap();
        assert!(matches!(estimate_span(&wrong, &intr), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn focal_length() {
        let intr = CameraIntrinsics::default();
        let expected = 240.0 / libm::tan(29.0f64.to_radians());
        assert!((intr.focal_y() - expected).abs() < 1e-9);
        assert!(CameraIntrinsics::new(0.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(PI, 640, 480).is_err());
    }

    proptest! {
        #[test]
        fn median_is_permutation_invariant(mut row in proptest::collection::vec(1u16..10_000, 1..40), seed in any::<u64>()) {
            let w = row.len();
            let a = row_median_depth(&DepthImage::new(w, 1, row.clone()).unwrap(), 0).unwrap();
            // Deterministic shuffle from the seed.
            let mut s = seed | 1;
            for i in (1..w).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                row.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let b = row_median_depth(&DepthImage::new(w, 1, row).unwrap(), 0).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mask_rows_non_increasing_in_dfov(a in 1.0f64..20.0, b in 1.0f64..20.0, h in 16usize..1000) {
            let robot = RobotGeometry { length: 1.0, scale: 1.0 };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rows_lo = stage2_mask(&span(lo), &robot, h).unwrap().rows();
            let rows_hi = stage2_mask(&span(hi), &robot, h).unwrap().rows();
            prop_assert!(rows_hi <= rows_lo);
        }
    }
}
