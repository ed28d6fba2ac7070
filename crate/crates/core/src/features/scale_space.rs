use alloc::vec::Vec;

use super::blur::gaussian_blur;
use super::FeatureParams;
use crate::image::GrayImage;
use crate::{Error, Result};

/// Blur already present in a camera image, in pixels.
const ASSUMED_INPUT_BLUR: f32 = 0.5;

/// Single-channel float plane; DoG values may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    fn downsample(&self) -> Plane {
        let (w, h) = (self.width.div_ceil(2), self.height.div_ceil(2));
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = &self.data[2 * y * self.width..(2 * y + 1) * self.width];
            data.extend(row.iter().step_by(2));
        }
        Plane { width: w, height: h, data }
    }

    fn upsample(&self) -> Plane {
        let (w, h) = (self.width * 2, self.height * 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = (y as f32 * 0.5).min((self.height - 1) as f32);
            let y0 = sy as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = sy - y0 as f32;
            for x in 0..w {
                let sx = (x as f32 * 0.5).min((self.width - 1) as f32);
                let x0 = sx as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = sx - x0 as f32;
                let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
                let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
                data.push(top * (1.0 - fy) + bot * fy);
            }
        }
        Plane { width: w, height: h, data }
    }
}

/// Gaussian stack of one octave and its difference-of-Gaussians stack.
#[derive(Debug, Clone)]
pub struct Octave {
    pub gaussians: Vec<Plane>,
    pub dogs: Vec<Plane>,
}

#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub scales_per_octave: usize,
    pub base_sigma: f32,
    /// Input was doubled before the first octave.
    pub upsampled: bool,
}

impl ScaleSpace {
    /// Absolute blur of Gaussian level `level` in `octave`, in input-image pixels.
    pub fn sigma(&self, octave: usize, level: usize) -> f32 {
        let exp = octave as f32 + level as f32 / self.scales_per_octave as f32;
        let s = self.base_sigma * libm::exp2f(exp);
        if self.upsampled {
            s * 0.5
        } else {
            s
        }
    }

    /// Factor from octave pixel coordinates to input-image coordinates.
    pub fn octave_scale(&self, octave: usize) -> f32 {
        let s = libm::exp2f(octave as f32);
        if self.upsampled {
            s * 0.5
        } else {
            s
        }
    }
}

/// `min(max_octaves, ⌊log2(min(W, H))⌋ − 2)`, never below one.
pub fn octave_count(width: usize, height: usize, max_octaves: Option<usize>) -> usize {
    let min_dim = width.min(height).max(1);
    let derived = (usize::BITS - 1 - min_dim.leading_zeros()) as usize;
    let derived = derived.saturating_sub(2).max(1);
    max_octaves.map_or(derived, |m| m.clamp(1, derived))
}

pub fn build_scale_space(img: &GrayImage, params: &FeatureParams) -> Result<ScaleSpace> {
    params.validate()?;
    if img.width() < 16 || img.height() < 16 {
        return Err(Error::ImageTooSmall { width: img.width(), height: img.height() });
    }
    let s = params.scales_per_octave;
    let mut base = Plane { width: img.width(), height: img.height(), data: img.data().to_vec() };
    let mut input_blur = ASSUMED_INPUT_BLUR;
    if params.upsample {
        base = base.upsample();
        input_blur *= 2.0;
    }
    let first = libm::sqrtf((params.base_sigma * params.base_sigma - input_blur * input_blur).max(0.01));
    base = gaussian_blur(&base, first);

    // Incremental blur between consecutive levels, in octave pixels.
    let k = libm::exp2f(1.0 / s as f32);
    let increments: Vec<f32> = (1..s + 3)
        .map(|i| {
            let prev = params.base_sigma * libm::powf(k, (i - 1) as f32);
            let total = prev * k;
            libm::sqrtf(total * total - prev * prev)
        })
        .collect();

    let n_octaves = octave_count(base.width, base.height, params.max_octaves);
    let mut octaves: Vec<Octave> = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        let first_level = if o == 0 { base.clone() } else { octaves[o - 1].gaussians[s].downsample() };
        let mut gaussians = Vec::with_capacity(s + 3);
        gaussians.push(first_level);
        for inc in &increments {
            let next = gaussian_blur(gaussians.last().expect("non-empty"), *inc);
            gaussians.push(next);
        }
        let dogs = gaussians
            .windows(2)
            .map(|pair| Plane {
                width: pair[0].width,
                height: pair[0].height,
                data: pair[1].data.iter().zip(&pair[0].data).map(|(b, a)| b - a).collect(),
            })
            .collect();
        octaves.push(Octave { gaussians, dogs });
    }

    Ok(ScaleSpace { octaves, scales_per_octave: s, base_sigma: params.base_sigma, upsampled: params.upsample })
}
