/// splitmix64 finalizer.
#[inline]
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn lattice(seed: u64, ix: i64, iy: i64) -> f32 {
    let h = mix(seed ^ mix((ix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (iy as u64).wrapping_add(0x632b_e59b_d9b4_e019)));
    (h >> 40) as f32 / (1u64 << 24) as f32
}

#[inline]
fn smooth(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[0, 1]` on a unit lattice.
pub(crate) fn value_noise(seed: u64, x: f64, y: f64) -> f32 {
    let (fx, fy) = (libm::floor(x), libm::floor(y));
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (smooth((x - fx) as f32), smooth((y - fy) as f32));
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * tx;
    let bot = c + (d - c) * tx;
    top + (bot - top) * ty
}

/// Two-octave value noise with per-octave fade-out once a pixel footprint
/// covers a lattice cell. Returns a zero-mean modulation in about `[-1, 1]`.
pub(crate) fn two_octave(seed: u64, x: f64, y: f64, cells: [f64; 2], footprint: f64) -> f32 {
    let weights = [0.6f32, 0.4f32];
    let mut acc = 0.0f32;
    for (i, (&cell, &w)) in cells.iter().zip(&weights).enumerate() {
        let fade = (1.5 - footprint / cell).clamp(0.0, 1.0) as f32;
        if fade == 0.0 {
            continue;
        }
        let n = value_noise(seed.wrapping_add(i as u64 * 0x51_7cc1_b727_220a), x / cell, y / cell);
        acc += w * fade * (2.0 * n - 1.0);
    }
    acc
}
