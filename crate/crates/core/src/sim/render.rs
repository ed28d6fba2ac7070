use alloc::vec;
use alloc::vec::Vec;

use super::texture::{two_octave, value_noise};
use super::world::{CameraPose, WorldConfig};
use crate::headland::CameraIntrinsics;
use crate::image::{DepthImage, RgbImage};

/// What a pixel's ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// Nothing: sky, or past the far edge of the headland.
    Void,
    /// Ground between the crop rows.
    Field,
    Headland,
    Plant,
}

impl Surface {
    pub fn is_ground(self) -> bool {
        matches!(self, Surface::Field | Surface::Headland)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub rgb: RgbImage,
    pub depth: DepthImage,
    pub surfaces: Vec<Surface>,
}

const SKY: [f64; 3] = [0.78, 0.86, 0.95];
const FIELD: [f64; 3] = [0.42, 0.33, 0.24];
const SOIL: [f64; 3] = [0.50, 0.39, 0.28];
const VERDANT: [f64; 3] = [0.28, 0.50, 0.20];
const PLANT: [f64; 3] = [0.20, 0.55, 0.18];
const PLANT_CONTRAST: f64 = 0.6;

const GROUND_CELLS: [f64; 2] = [0.016, 0.05];
const PLANT_CELLS: [f64; 2] = [0.008, 0.025];

const FIELD_SEED: u64 = 0x1f3a_5c7e_9b0d_2468;
const HEADLAND_SEED: u64 = 0x7c15_9e37_79b9_4a7f;
const PLANT_SEED: u64 = 0x2545_f491_4f6c_dd1d;

/// Ray-cast RGB and Euclidean depth (mm, 0 = no hit) for one camera pose.
pub fn render_frame(world: &WorldConfig, pose: &CameraPose, intr: &CameraIntrinsics) -> (RgbImage, DepthImage) {
    let frame = render_labeled(world, pose, intr);
    (frame.rgb, frame.depth)
}

/// [`render_frame`] plus the surface hit by every pixel.
pub fn render_labeled(world: &WorldConfig, pose: &CameraPose, intr: &CameraIntrinsics) -> RenderedFrame {
    let (w, h) = (intr.width, intr.height);
    let f = intr.focal_y();
    let (cx, cy) = (intr.cx(), intr.cy());
    let (sp, cp) = libm::sincos(pose.pitch);

    let mut rgb = vec![0u8; w * h * 3];
    let mut depth = vec![0u16; w * h];
    let mut surfaces = vec![Surface::Void; w * h];
    for y in 0..h {
        let v = y as f64 - cy;
        for x in 0..w {
            let u = x as f64 - cx;
            // forward (cp, 0, -sp) * f + right (0, -1, 0) * u + down (-sp, 0, -cp) * v
            let (dx, dy, dz) = (cp * f - sp * v, -u, -sp * f - cp * v);
            let norm = libm::sqrt(dx * dx + dy * dy + dz * dz);
            let dir = [dx / norm, dy / norm, dz / norm];
            let (surface, t, color) = trace(world, pose, f, dir);
            let i = y * w + x;
            surfaces[i] = surface;
            if surface != Surface::Void {
                depth[i] = libm::round(t * 1000.0).min(f64::from(u16::MAX)) as u16;
            }
            for c in 0..3 {
                rgb[3 * i + c] = libm::round(color[c].clamp(0.0, 1.0) * 255.0) as u8;
            }
        }
    }
    RenderedFrame {
        rgb: RgbImage::new(w, h, rgb).expect("buffer sized from intrinsics"),
        depth: DepthImage::new(w, h, depth).expect("buffer sized from intrinsics"),
        surfaces,
    }
}

/// Stretch applied to the noise so that its extremes saturate; `contrast` is
/// then the Michelson contrast of the rendered texture.
const STRETCH: f64 = 2.5;

fn shade(base: [f64; 3], contrast: f64, modulation: f32) -> [f64; 3] {
    let k = 1.0 + contrast * (STRETCH * f64::from(modulation)).clamp(-1.0, 1.0);
    [base[0] * k, base[1] * k, base[2] * k]
}

fn plant_seed(world: &WorldConfig, index: i64, row: usize) -> u64 {
    world.texture_seed ^ PLANT_SEED.wrapping_mul(index as u64 * 2 + row as u64 + 1)
}

fn trace(world: &WorldConfig, pose: &CameraPose, focal: f64, dir: [f64; 3]) -> (Surface, f64, [f64; 3]) {
    let h = pose.height;
    let t_ground = if dir[2] < 0.0 { h / -dir[2] } else { f64::INFINITY };

    if let Some((t, color)) = trace_plants(world, pose, focal, dir, t_ground) {
        return (Surface::Plant, t, color);
    }
    if t_ground.is_finite() {
        let gx = pose.position + t_ground * dir[0];
        let gy = t_ground * dir[1];
        // Along-track stretch of the pixel footprint at grazing incidence.
        let footprint = t_ground / (focal * -dir[2]);
        if gx <= world.row_length {
            let m = two_octave(world.texture_seed ^ FIELD_SEED, gx, gy, GROUND_CELLS, footprint);
            return (Surface::Field, t_ground, shade(FIELD, world.field_contrast, m));
        }
        if gx <= world.headland_end() {
            let m = two_octave(world.texture_seed ^ HEADLAND_SEED, gx, gy, GROUND_CELLS, footprint);
            let base = match world.headland_texture {
                super::HeadlandTexture::Soil => SOIL,
                super::HeadlandTexture::Verdant => VERDANT,
            };
            return (Surface::Headland, t_ground, shade(base, world.headland_contrast(), m));
        }
    }
    (Surface::Void, 0.0, SKY)
}

/// First plant billboard hit before the ground. Plants are planes facing the
/// track at x = (k + ½)·plant_spacing, one per row.
fn trace_plants(
    world: &WorldConfig,
    pose: &CameraPose,
    focal: f64,
    dir: [f64; 3],
    t_ground: f64,
) -> Option<(f64, [f64; 3])> {
    if dir[0] <= 0.0 {
        return None;
    }
    let (h, ph) = (pose.height, world.plant_height);
    // Ray parameters where 0 <= z <= plant_height.
    let t_lo = if h > ph {
        if dir[2] >= 0.0 {
            return None;
        }
        (h - ph) / -dir[2]
    } else {
        0.0
    };
    let x_lo = pose.position + t_lo * dir[0];
    let x_hi = if t_ground.is_finite() { pose.position + t_ground * dir[0] } else { world.row_length };
    let x_hi = x_hi.min(world.row_length);
    if x_hi < x_lo {
        return None;
    }
    let ps = world.plant_spacing;
    let first = libm::ceil(x_lo / ps - 0.5).max(0.0) as i64;
    let last = libm::floor(x_hi / ps - 0.5) as i64;
    let half_w = 0.5 * world.plant_width;
    for k in first..=last {
        let px = (k as f64 + 0.5) * ps;
        if px >= world.row_length {
            break;
        }
        let t = (px - pose.position) / dir[0];
        let y = t * dir[1];
        let z = h + t * dir[2];
        if !(0.0..=ph).contains(&z) {
            continue;
        }
        for (row, centre) in [-0.5 * world.row_spacing, 0.5 * world.row_spacing].into_iter().enumerate() {
            let u = y - centre;
            if u.abs() > half_w {
                continue;
            }
            let seed = plant_seed(world, k, row);
            let (nu, nz) = (u / half_w, (z - 0.5 * ph) / (0.5 * ph));
            let ragged = 1.0 + 0.5 * (f64::from(value_noise(seed, u / 0.02, z / 0.02)) - 0.5);
            if nu * nu + nz * nz > ragged {
                continue;
            }
            let m = two_octave(seed, u, z, PLANT_CELLS, t / focal);
            return Some((t, shade(PLANT, PLANT_CONTRAST, m)));
        }
    }
    None
}
