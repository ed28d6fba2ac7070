//! DoG extrema, sub-pixel refinement and orientation assignment.

use alloc::vec::Vec;
use core::f32::consts::TAU;

use super::scale_space::{Plane, ScaleSpace};
use super::{fast_atan2, wrap_angle, FeatureParams, Keypoint};

/// Pixels skipped at every octave border during the extremum scan.
const SCAN_BORDER: usize = 5;
const MAX_REFINE_STEPS: usize = 5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f32 = 1.5;
const ORI_RADIUS_FACTOR: f32 = 3.0;
const ORI_PEAK_RATIO: f32 = 0.8;

fn is_extremum(below: &Plane, mid: &Plane, above: &Plane, x: usize, y: usize, v: f32) -> bool {
    let w = mid.width;
    let maximum = v > 0.0;
    for plane in [below, mid, above] {
        for yy in y - 1..=y + 1 {
            let row = &plane.data[yy * w + x - 1..yy * w + x + 2];
            for (i, &n) in row.iter().enumerate() {
                if core::ptr::eq(plane, mid) && yy == y && i == 1 {
                    continue;
                }
                if (maximum && n >= v) || (!maximum && n <= v) {
                    return false;
                }
            }
        }
    }
    true
}

struct Refined {
    x: usize,
    y: usize,
    layer: usize,
    offset: [f64; 3],
    contrast: f64,
}

/// Quadratic interpolation of the DoG around `(x, y, layer)`; moves to the
/// neighbouring sample while an offset exceeds half a pixel.
fn refine(
    dogs: &[Plane],
    mut x: usize,
    mut y: usize,
    mut layer: usize,
    params: &FeatureParams,
) -> Option<Refined> {
    let s = params.scales_per_octave;
    let (w, h) = (dogs[0].width, dogs[0].height);
    let mut step = 0;
    loop {
        let (cur, prev, next) = (&dogs[layer], &dogs[layer - 1], &dogs[layer + 1]);
        let at = |p: &Plane, dx: isize, dy: isize| -> f64 {
            p.get((x as isize + dx) as usize, (y as isize + dy) as usize) as f64
        };
        let v = at(cur, 0, 0);
        let g = [
            0.5 * (at(cur, 1, 0) - at(cur, -1, 0)),
            0.5 * (at(cur, 0, 1) - at(cur, 0, -1)),
            0.5 * (at(next, 0, 0) - at(prev, 0, 0)),
        ];
        let dxx = at(cur, 1, 0) + at(cur, -1, 0) - 2.0 * v;
        let dyy = at(cur, 0, 1) + at(cur, 0, -1) - 2.0 * v;
        let dss = at(next, 0, 0) + at(prev, 0, 0) - 2.0 * v;
        let dxy = 0.25 * (at(cur, 1, 1) - at(cur, -1, 1) - at(cur, 1, -1) + at(cur, -1, -1));
        let dxs = 0.25 * (at(next, 1, 0) - at(next, -1, 0) - at(prev, 1, 0) + at(prev, -1, 0));
        let dys = 0.25 * (at(next, 0, 1) - at(next, 0, -1) - at(prev, 0, 1) + at(prev, 0, -1));
        let hess = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
        let sol = solve3(&hess, &g)?;
        let offset = [-sol[0], -sol[1], -sol[2]];

        if offset.iter().all(|o| o.abs() < 0.5) {
            let dot = g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2];
            let contrast = v + 0.5 * dot;
            if contrast.abs() < f64::from(params.contrast_threshold) {
                return None;
            }
            let r = f64::from(params.edge_ratio_threshold);
            let tr = dxx + dyy;
            let det = dxx * dyy - dxy * dxy;
            if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
                return None;
            }
            return Some(Refined { x, y, layer, offset, contrast });
        }

        step += 1;
        if step >= MAX_REFINE_STEPS || offset.iter().any(|o| o.abs() > 1e6) {
            return None;
        }
        let nx = x as isize + libm::round(offset[0]) as isize;
        let ny = y as isize + libm::round(offset[1]) as isize;
        let nl = layer as isize + libm::round(offset[2]) as isize;
        let b = SCAN_BORDER as isize;
        if nl < 1 || nl > s as isize || nx < b || nx >= w as isize - b || ny < b || ny >= h as isize - b {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
    }
}

/// Solves `a · x = b` for a symmetric 3×3 system by Cramer's rule.
fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(a);
    if d.abs() < 1e-18 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut m = *a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *o = det3(&m) / d;
    }
    Some(out)
}

/// Dominant gradient directions around `(x, y)` of a Gaussian level.
fn orientations(img: &Plane, x: usize, y: usize, scale_oct: f32, out: &mut Vec<f32>) {
    let sigma = ORI_SIGMA_FACTOR * scale_oct;
    let radius = libm::roundf(ORI_RADIUS_FACTOR * sigma) as isize;
    let denom = -1.0 / (2.0 * sigma * sigma);
    let falloff: Vec<f32> = (0..=radius).map(|d| libm::expf((d * d) as f32 * denom)).collect();
    let mut hist = [0.0f32; ORI_BINS];
    for dy in -radius..=radius {
        let yy = y as isize + dy;
        if yy <= 0 || yy >= img.height as isize - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let xx = x as isize + dx;
            if xx <= 0 || xx >= img.width as isize - 1 {
                continue;
            }
            let (xx, yy) = (xx as usize, yy as usize);
            let gx = img.get(xx + 1, yy) - img.get(xx - 1, yy);
            let gy = img.get(xx, yy + 1) - img.get(xx, yy - 1);
            let mag = libm::sqrtf(gx * gx + gy * gy);
            if mag == 0.0 {
                continue;
            }
            let weight = falloff[dx.unsigned_abs()] * falloff[dy.unsigned_abs()];
            let angle = fast_atan2(gy, gx);
            let bin = libm::roundf(angle * ORI_BINS as f32 / TAU) as isize;
            hist[bin.rem_euclid(ORI_BINS as isize) as usize] += weight * mag;
        }
    }

    let n = ORI_BINS;
    let smooth: [f32; ORI_BINS] = core::array::from_fn(|i| {
        (hist[(i + n - 2) % n] + hist[(i + 2) % n]) * (1.0 / 16.0)
            + (hist[(i + n - 1) % n] + hist[(i + 1) % n]) * (4.0 / 16.0)
            + hist[i] * (6.0 / 16.0)
    });
    let max = smooth.iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return;
    }
    for i in 0..n {
        let (l, c, r) = (smooth[(i + n - 1) % n], smooth[i], smooth[(i + 1) % n]);
        if c > l && c > r && c >= ORI_PEAK_RATIO * max {
            let bin = i as f32 + 0.5 * (l - r) / (l - 2.0 * c + r);
            out.push(wrap_angle(bin * TAU / n as f32));
        }
    }
}

/// Oriented keypoints of every octave, unsorted.
pub(crate) fn detect(space: &ScaleSpace, params: &FeatureParams) -> Vec<Keypoint> {
    let s = params.scales_per_octave;
    let pre_threshold = 0.5 * params.contrast_threshold;
    let mut keypoints = Vec::new();
    let mut angles = Vec::with_capacity(4);
    for (o, octave) in space.octaves.iter().enumerate() {
        let dogs = &octave.dogs;
        let (w, h) = (dogs[0].width, dogs[0].height);
        if w <= 2 * SCAN_BORDER || h <= 2 * SCAN_BORDER {
            continue;
        }
        let to_input = space.octave_scale(o);
        for layer in 1..=s {
            let (below, mid, above) = (&dogs[layer - 1], &dogs[layer], &dogs[layer + 1]);
            for y in SCAN_BORDER..h - SCAN_BORDER {
                let row = &mid.data[y * w..(y + 1) * w];
                for x in SCAN_BORDER..w - SCAN_BORDER {
                    let v = row[x];
                    if v.abs() <= pre_threshold || !is_extremum(below, mid, above, x, y, v) {
                        continue;
                    }
                    let Some(r) = refine(dogs, x, y, layer, params) else {
                        continue;
                    };
                    let scale_oct =
                        params.base_sigma * libm::exp2f((r.layer as f64 + r.offset[2]) as f32 / s as f32);
                    angles.clear();
                    orientations(&octave.gaussians[r.layer], r.x, r.y, scale_oct, &mut angles);
                    for &orientation in &angles {
                        keypoints.push(Keypoint {
                            x: ((r.x as f64 + r.offset[0]) as f32) * to_input,
                            y: ((r.y as f64 + r.offset[1]) as f32) * to_input,
                            sigma: scale_oct * to_input,
                            octave: o,
                            layer: r.layer,
                            orientation,
                            response: r.contrast.abs() as f32,
                        });
                    }
                }
            }
        }
    }
    keypoints
}
