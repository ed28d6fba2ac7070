#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rowexit_core::features::{Descriptor, DESCRIPTOR_LEN};
use rowexit_core::headland::CameraIntrinsics;
use rowexit_core::image::{GrayImage, RgbImage};
use rowexit_core::sim::{render_frame, render_labeled, CameraPose, HeadlandTexture, WorldConfig};

/// Random Gaussian blobs on a torus: periodic in both axes, so shifted and
/// rotated copies carry exactly the same content.
pub fn torus_blobs(size: usize, blobs: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(f32, f32, f32, f32)> = (0..blobs)
        .map(|_| {
            let x = rng.random_range(0.0..size as f32);
            let y = rng.random_range(0.0..size as f32);
            let s = rng.random_range(1.5f32..5.0);
            let a = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.6f32..1.0);
            (x, y, s, a)
        })
        .collect();
    let n = size as f32;
    let mut acc = vec![0.0f32; size * size];
    for &(bx, by, s, a) in &params {
        let r = (4.0 * s).ceil() as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                let x = (bx.floor() as isize + dx).rem_euclid(size as isize) as usize;
                let y = (by.floor() as isize + dy).rem_euclid(size as isize) as usize;
                // Wrapped offset from the blob centre.
                let mut ox = x as f32 - bx;
                let mut oy = y as f32 - by;
                ox -= n * (ox / n).round();
                oy -= n * (oy / n).round();
                acc[y * size + x] += a * (-(ox * ox + oy * oy) / (2.0 * s * s)).exp();
            }
        }
    }
    let data = acc.iter().map(|v| (0.5 + 0.45 * v).clamp(0.0, 1.0)).collect();
    GrayImage::new(size, size, data).unwrap()
}

/// `img` moved right by `dx` and down by `dy` with wraparound.
pub fn shift_wrapped(img: &GrayImage, dx: usize, dy: usize) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(w, h, |x, y| img.get((x + w - dx % w) % w, (y + h - dy % h) % h))
}

/// Quarter turn clockwise: input pixel (x, y) lands on (h − 1 − y, x).
pub fn rotate_cw(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(h, w, |x, y| img.get(y, h - 1 - x))
}

pub fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    let mut v: [f32; DESCRIPTOR_LEN] = core::array::from_fn(|_| rng.random::<f32>());
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    Descriptor(v)
}

pub fn random_descriptors(rng: &mut ChaCha8Rng, n: usize) -> Vec<Descriptor> {
    (0..n).map(|_| random_descriptor(rng)).collect()
}

/// Camera just past the row end looking at a headland of the given regime.
pub fn headland_view(regime: HeadlandTexture, seed: u64, intr: &CameraIntrinsics) -> (RgbImage, GrayImage) {
    let world = WorldConfig { headland_texture: regime, texture_seed: seed, ..WorldConfig::default() };
    let pose = CameraPose::default().at(world.row_length + 0.5 + 0.1 * seed as f64);
    let (rgb, _) = render_frame(&world, &pose, intr);
    let gray = rowexit_core::image::rgb_to_gray(&rgb);
    (rgb, gray)
}

/// Ground depth never decreases going up a column through consecutive ground pixels.
pub fn ground_depth_rises_upwards(world: &WorldConfig, pose: &CameraPose, intr: &CameraIntrinsics) -> usize {
    let frame = render_labeled(world, pose, intr);
    let (w, d) = (intr.width, frame.depth.data());
    let mut checked = 0;
    for y in 1..intr.height {
        for x in 0..w {
            let (below, above) = (y * w + x, (y - 1) * w + x);
            if frame.surfaces[below].is_ground() && frame.surfaces[above].is_ground() {
                assert!(d[above] >= d[below], "{pose:?} at ({x}, {y}): {} < {}", d[above], d[below]);
                checked += 1;
            }
        }
    }
    checked
}
