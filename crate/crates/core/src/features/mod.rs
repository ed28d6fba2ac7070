//! Scale-invariant keypoints and 128-d gradient-histogram descriptors.
//!
//! Difference-of-Gaussians extrema over a Gaussian pyramid, refined by a
//! quadratic fit, filtered on contrast and edge response, oriented from a
//! 36-bin gradient histogram and described by a 4×4×8 histogram grid. The
//! output order is fixed so scores computed downstream are reproducible.

mod blur;
mod descriptor;
mod detect;
mod scale_space;

use alloc::vec::Vec;
use core::cmp::Ordering;

pub use descriptor::{compute_descriptor, compute_descriptor_with_probe};
pub use scale_space::{build_scale_space, octave_count, Octave, Plane, ScaleSpace};

use crate::image::GrayImage;
use crate::{Error, Result};

pub const DESCRIPTOR_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub scales_per_octave: usize,
    /// Blur of the first pyramid level, in pixels.
    pub base_sigma: f32,
    /// Minimum |DoG| at the refined extremum (image values in `[0, 1]`).
    pub contrast_threshold: f32,
    /// Maximum ratio of principal curvatures.
    pub edge_ratio_threshold: f32,
    /// Caps the derived octave count when set.
    pub max_octaves: Option<usize>,
    /// Double the input before building the pyramid.
    pub upsample: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            scales_per_octave: 3,
            base_sigma: 1.6,
            contrast_threshold: 0.03,
            edge_ratio_threshold: 10.0,
            max_octaves: None,
            upsample: false,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if self.scales_per_octave < 1 {
            return Err(Error::InvalidConfig("scales_per_octave must be at least 1"));
        }
        if !(self.base_sigma > 0.0) {
            return Err(Error::InvalidConfig("base_sigma must be positive"));
        }
        if !(self.contrast_threshold > 0.0) || !(self.edge_ratio_threshold > 0.0) {
            return Err(Error::InvalidConfig("feature thresholds must be positive"));
        }
        if self.max_octaves == Some(0) {
            return Err(Error::InvalidConfig("max_octaves must be at least 1"));
        }
        Ok(())
    }
}

/// Oriented scale-space feature location, in input-image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Absolute blur scale in input pixels.
    pub sigma: f32,
    pub octave: usize,
    /// Gaussian level inside the octave the descriptor is sampled from.
    pub layer: usize,
    /// Radians in `[0, 2π)`, image axes (x right, y down).
    pub orientation: f32,
    /// |DoG| at the refined extremum.
    pub response: f32,
}

/// Unit-norm 128-d descriptor with entries in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn values(&self) -> &[f32; DESCRIPTOR_LEN] {
        &self.0
    }

    pub fn norm(&self) -> f32 {
        libm::sqrtf(self.0.iter().map(|v| v * v).sum())
    }

    /// Euclidean distance.
    #[inline]
    pub fn distance(&self, other: &Descriptor) -> f32 {
        libm::sqrtf(self.distance_squared(other))
    }

    #[inline]
    pub fn distance_squared(&self, other: &Descriptor) -> f32 {
        // Eight independent lanes so the loop vectorizes without reassociation.
        let mut acc = [0.0f32; 8];
        for (a, b) in self.0.chunks_exact(8).zip(other.0.chunks_exact(8)) {
            for i in 0..8 {
                let d = a[i] - b[i];
                acc[i] += d * d;
            }
        }
        ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub keypoint: Keypoint,
    pub descriptor: Descriptor,
}

/// Oriented keypoints without descriptors, in detection order.
pub fn detect_keypoints(space: &ScaleSpace, params: &FeatureParams) -> Vec<Keypoint> {
    detect::detect(space, params)
}

/// Keypoints and descriptors of `img`, sorted by `(y, x, sigma, orientation)`.
///
/// Keypoints whose descriptor window leaves the image or sees no gradient are
/// dropped.
pub fn detect_and_describe(img: &GrayImage, params: &FeatureParams) -> Result<Vec<Feature>> {
    let space = build_scale_space(img, params)?;
    let mut features: Vec<Feature> = detect::detect(&space, params)
        .into_iter()
        .filter_map(|keypoint| {
            compute_descriptor(&space, &keypoint).ok().map(|descriptor| Feature { keypoint, descriptor })
        })
        .collect();
    features.sort_by(|a, b| keypoint_order(&a.keypoint, &b.keypoint));
    Ok(features)
}

/// Wraps any finite angle into `[0, 2π)`.
#[inline]
pub(crate) fn wrap_angle(a: f32) -> f32 {
    let tau = core::f32::consts::TAU;
    let a = a - tau * libm::floorf(a / tau);
    // Rounding can land exactly on 2π.
    if a >= tau || a < 0.0 {
        0.0
    } else {
        a
    }
}

/// `atan2(y, x)` within 1e-5 rad, several times cheaper than the libm routine.
/// Gradient directions only feed 8- and 36-bin histograms.
#[inline]
pub(crate) fn fast_atan2(y: f32, x: f32) -> f32 {
    use core::f32::consts::{FRAC_PI_2, PI};
    let (ax, ay) = (x.abs(), y.abs());
    if ax == 0.0 && ay == 0.0 {
        return 0.0;
    }
    let (t, swap) = if ay > ax { (ax / ay, true) } else { (ay / ax, false) };
    let t2 = t * t;
    // Minimax polynomial for atan on [0, 1].
    let p = t
        * (0.999_866
            + t2 * (-0.330_299_5 + t2 * (0.180_141 + t2 * (-0.085_133 + t2 * 0.020_835_1))));
    let mut a = if swap { FRAC_PI_2 - p } else { p };
    if x < 0.0 {
        a = PI - a;
    }
    if y < 0.0 {
        -a
    } else {
        a
    }
}

fn keypoint_order(a: &Keypoint, b: &Keypoint) -> Ordering {
    a.y.total_cmp(&b.y)
        .then(a.x.total_cmp(&b.x))
        .then(a.sigma.total_cmp(&b.sigma))
        .then(a.orientation.total_cmp(&b.orientation))
}
