use alloc::vec;
use alloc::vec::Vec;

use super::scale_space::Plane;

/// Normalized half kernel `[k0, k1, .., kr]` with radius `⌈3σ⌉`.
pub(crate) fn half_kernel(sigma: f32) -> Vec<f32> {
    let radius = libm::ceilf(3.0 * sigma).max(1.0) as usize;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f32> = (0..=radius).map(|i| libm::expf(-((i * i) as f32) / denom)).collect();
    let sum = k[0] + 2.0 * k[1..].iter().sum::<f32>();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Mirror index into `0..n` without repeating the edge sample (`-1 -> 1`).
#[inline]
fn reflect(mut i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let last = n as isize - 1;
    loop {
        if i < 0 {
            i = -i;
        } else if i > last {
            i = 2 * last - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian blur with mirrored borders.
pub(crate) fn gaussian_blur(src: &Plane, sigma: f32) -> Plane {
    let k = half_kernel(sigma);
    let r = k.len() - 1;
    let (w, h) = (src.width, src.height);

    // Horizontal pass through a padded row buffer.
    let mut tmp = vec![0.0f32; w * h];
    let mut pad = vec![0.0f32; w + 2 * r];
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        for (i, p) in pad.iter_mut().enumerate() {
            *p = row[reflect(i as isize - r as isize, w)];
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let c = x + r;
            let mut acc = k[0] * pad[c];
            for (i, &kv) in k.iter().enumerate().skip(1) {
                acc += kv * (pad[c - i] + pad[c + i]);
            }
            *o = acc;
        }
    }

    // Vertical pass, accumulating whole rows so the inner loop vectorizes.
    let mut dst = vec![0.0f32; w * h];
    for y in 0..h {
        let out = &mut dst[y * w..(y + 1) * w];
        let centre = &tmp[y * w..(y + 1) * w];
        for (o, &v) in out.iter_mut().zip(centre) {
            *o = k[0] * v;
        }
        for (i, &kv) in k.iter().enumerate().skip(1) {
            let up = reflect(y as isize - i as isize, h);
            let down = reflect(y as isize + i as isize, h);
            let a = &tmp[up * w..(up + 1) * w];
            let b = &tmp[down * w..(down + 1) * w];
            for ((o, &av), &bv) in out.iter_mut().zip(a).zip(b) {
                *o += kv * (av + bv);
            }
        }
    }
    Plane { width: w, height: h, data: dst }
}
