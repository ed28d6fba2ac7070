use crate::headland::CameraIntrinsics;
use crate::{Error, Result};

/// Ground cover of the headland strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadlandTexture {
    Soil,
    Verdant,
}

impl HeadlandTexture {
    pub fn name(self) -> &'static str {
        match self {
            HeadlandTexture::Soil => "soil",
            HeadlandTexture::Verdant => "verdant",
        }
    }
}

impl core::str::FromStr for HeadlandTexture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soil" => Ok(HeadlandTexture::Soil),
            "verdant" => Ok(HeadlandTexture::Verdant),
            _ => Err(Error::InvalidConfig("headland texture must be soil or verdant")),
        }
    }
}

/// A straight crop field ending in a headland.
///
/// The track runs along +x with the robot centred on y = 0 between two plant
/// rows at y = ±row_spacing/2. Rows end at x = row_length, the headland
/// covers (row_length, row_length + headland_depth], and there is no ground
/// beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    pub row_length: f64,
    pub row_spacing: f64,
    pub plant_spacing: f64,
    pub plant_height: f64,
    pub plant_width: f64,
    pub headland_depth: f64,
    pub headland_texture: HeadlandTexture,
    pub texture_seed: u64,
    /// Headland modulation depth for each regime.
    pub soil_contrast: f64,
    pub verdant_contrast: f64,
    /// Modulation depth of the in-row ground.
    pub field_contrast: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            row_length: 10.0,
            row_spacing: 0.5,
            plant_spacing: 0.2,
            plant_height: 0.25,
            plant_width: 0.16,
            headland_depth: 6.0,
            headland_texture: HeadlandTexture::Verdant,
            texture_seed: 0,
            soil_contrast: 0.15,
            verdant_contrast: 0.6,
            field_contrast: 0.6,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            self.row_length,
            self.row_spacing,
            self.plant_spacing,
            self.plant_height,
            self.plant_width,
            self.headland_depth,
        ];
        if !lengths.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidConfig("world lengths must be positive"));
        }
        let contrasts = [self.soil_contrast, self.verdant_contrast, self.field_contrast];
        if !contrasts.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::InvalidConfig("texture contrast must lie in [0, 1]"));
        }
        if self.soil_contrast >= self.verdant_contrast {
            return Err(Error::InvalidConfig("soil contrast must be below verdant contrast"));
        }
        Ok(())
    }

    pub fn headland_contrast(&self) -> f64 {
        match self.headland_texture {
            HeadlandTexture::Soil => self.soil_contrast,
            HeadlandTexture::Verdant => self.verdant_contrast,
        }
    }

    pub fn headland_end(&self) -> f64 {
        self.row_length + self.headland_depth
    }
}

/// Camera mounting and position along the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub height: f64,
    /// Tilt of the optical axis below the horizon, radians.
    pub pitch: f64,
    /// Camera x coordinate, meters.
    pub position: f64,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self { height: 1.0, pitch: 55f64.to_radians(), position: 0.0 }
    }
}

impl CameraPose {
    pub fn validate(&self) -> Result<()> {
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::InvalidConfig("camera height must be positive"));
        }
        if !(self.pitch > 0.0 && self.pitch < core::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidConfig("camera pitch must lie in (0, pi/2)"));
        }
        if !self.position.is_finite() {
            return Err(Error::InvalidConfig("camera position must be finite"));
        }
        Ok(())
    }

    pub fn at(self, position: f64) -> Self {
        Self { position, ..self }
    }

    /// Ground distance ahead of the camera seen along the optical axis.
    pub fn axis_ground_distance(&self) -> f64 {
        self.height / libm::tan(self.pitch)
    }

    /// Ground distance ahead of the camera seen by the bottom image edge.
    /// Taken as the robot's front: nothing closer is visible.
    pub fn front_offset(&self, intr: &CameraIntrinsics) -> f64 {
        self.height / libm::tan(self.pitch + intr.vertical_fov / 2.0)
    }
}
