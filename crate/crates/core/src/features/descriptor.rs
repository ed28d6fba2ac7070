use alloc::vec::Vec;
use core::f32::consts::TAU;

use super::scale_space::ScaleSpace;
use super::{fast_atan2, wrap_angle, Descriptor, Keypoint, DESCRIPTOR_LEN};
use crate::{Error, Result};

const GRID: usize = 4;
const ORI_BINS: usize = 8;
const BIN_WIDTH_FACTOR: f32 = 3.0;
const CLAMP: f32 = 0.2;

/// 4×4×8 gradient-orientation histogram in the keypoint's rotated frame.
pub fn compute_descriptor(space: &ScaleSpace, kp: &Keypoint) -> Result<Descriptor> {
    compute_descriptor_with_probe(space, kp, |_, _| {})
}

/// [`compute_descriptor`] that reports every pixel it reads to `probe`.
pub fn compute_descriptor_with_probe(
    space: &ScaleSpace,
    kp: &Keypoint,
    mut probe: impl FnMut(usize, usize),
) -> Result<Descriptor> {
    let octave = space.octaves.get(kp.octave).ok_or(Error::WindowOutOfBounds)?;
    let img = octave.gaussians.get(kp.layer).ok_or(Error::WindowOutOfBounds)?;
    let to_oct = 1.0 / space.octave_scale(kp.octave);
    let scale_oct = kp.sigma * to_oct;
    let cx = libm::roundf(kp.x * to_oct) as isize;
    let cy = libm::roundf(kp.y * to_oct) as isize;

    let hist_width = BIN_WIDTH_FACTOR * scale_oct;
    let (sin_t, cos_t) = libm::sincosf(kp.orientation);
    // Half extent of the rotated GRID-cell (16×16 sample) square.
    let half = 0.5 * GRID as f32 * hist_width * (cos_t.abs() + sin_t.abs());
    let radius = libm::ceilf(half) as isize;
    let (w, h) = (img.width as isize, img.height as isize);
    if cx - radius - 1 < 0 || cy - radius - 1 < 0 || cx + radius + 1 >= w || cy + radius + 1 >= h {
        return Err(Error::WindowOutOfBounds);
    }

    let (cos_n, sin_n) = (cos_t / hist_width, sin_t / hist_width);
    let bins_per_rad = ORI_BINS as f32 / TAU;
    let exp_scale = -1.0 / (0.5 * (GRID * GRID) as f32);
    let half_grid = 0.5 * GRID as f32 - 0.5;
    // Padded by one cell on each spatial side and wrapped on orientation.
    let mut hist = [0.0f32; (GRID + 2) * (GRID + 2) * (ORI_BINS + 2)];
    let idx = |r: usize, c: usize, o: usize| (r * (GRID + 2) + c) * (ORI_BINS + 2) + o;
    // Rotation preserves distance, so the Gaussian weight factors into dx and dy terms.
    let falloff: Vec<f32> = (0..=radius)
        .map(|d| libm::expf((d * d) as f32 / (hist_width * hist_width) * exp_scale))
        .collect();

    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let c_rot = dx as f32 * cos_n + dy as f32 * sin_n;
            let r_rot = -(dx as f32) * sin_n + dy as f32 * cos_n;
            let rbin = r_rot + half_grid;
            let cbin = c_rot + half_grid;
            if rbin < -0.5 || rbin > GRID as f32 - 0.5 || cbin < -0.5 || cbin > GRID as f32 - 0.5 {
                continue;
            }
            let (x, y) = ((cx + dx) as usize, (cy + dy) as usize);
            probe(x - 1, y);
            probe(x + 1, y);
            probe(x, y - 1);
            probe(x, y + 1);
            let gx = img.get(x + 1, y) - img.get(x - 1, y);
            let gy = img.get(x, y + 1) - img.get(x, y - 1);
            let mag = libm::sqrtf(gx * gx + gy * gy);
            if mag == 0.0 {
                continue;
            }
            let weight = falloff[dx.unsigned_abs()] * falloff[dy.unsigned_abs()];
            let angle = wrap_angle(fast_atan2(gy, gx) - kp.orientation);
            let obin = angle * bins_per_rad;

            // All three are non-negative here (bins shifted by the padding), so
            // truncation is the floor.
            let (rp, cp) = (rbin + 1.0, cbin + 1.0);
            let (r0, c0, o0) = (rp as usize, cp as usize, obin as usize);
            let (fr, fc, fo) = (rp - r0 as f32, cp - c0 as f32, obin - o0 as f32);
            let o0 = o0 % ORI_BINS;
            let v = mag * weight;

            let v_r1 = v * fr;
            let v_r0 = v - v_r1;
            for (ri, vr) in [(r0, v_r0), (r0 + 1, v_r1)] {
                let v_c1 = vr * fc;
                let v_c0 = vr - v_c1;
                for (ci, vc) in [(c0, v_c0), (c0 + 1, v_c1)] {
                    let v_o1 = vc * fo;
                    hist[idx(ri, ci, o0)] += vc - v_o1;
                    hist[idx(ri, ci, o0 + 1)] += v_o1;
                }
            }
        }
    }

    let mut values = [0.0f32; DESCRIPTOR_LEN];
    for r in 0..GRID {
        for c in 0..GRID {
            let base = idx(r + 1, c + 1, 0);
            let cell = &mut hist[base..base + ORI_BINS + 2];
            cell[0] += cell[ORI_BINS];
            cell[1] += cell[ORI_BINS + 1];
            let out = &mut values[(r * GRID + c) * ORI_BINS..(r * GRID + c + 1) * ORI_BINS];
            out.copy_from_slice(&cell[..ORI_BINS]);
        }
    }
    normalize(&mut values)?;
    let limit = CLAMP;
    values.iter_mut().for_each(|v| *v = v.min(limit));
    normalize(&mut values)?;
    Ok(Descriptor(values))
}

fn normalize(values: &mut [f32; DESCRIPTOR_LEN]) -> Result<()> {
    let norm = libm::sqrt(values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>());
    if !(norm > 1e-12) {
        return Err(Error::FlatNeighborhood);
    }
    let inv = (1.0 / norm) as f32;
    values.iter_mut().for_each(|v| *v *= inv);
    Ok(())
}
