//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment. Every key is listed in
//! [`KEYS`] with its meaning; anything else is rejected. `--set key=value`
//! overrides are applied after the file, in order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rowexit_core::headland::{CameraIntrinsics, MaskMapping};
use rowexit_core::pipeline::StageConfig;
use rowexit_core::sim::{validate_trial, CameraPose, HeadlandTexture, WorldConfig};

use crate::error::{CliError, Result};

/// Headland regime of each trial in a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimePlan {
    Fixed(HeadlandTexture),
    /// Verdant for even trial indices, soil for odd ones.
    Alternate,
}

impl RegimePlan {
    pub fn for_trial(self, index: u64) -> HeadlandTexture {
        match self {
            RegimePlan::Fixed(t) => t,
            RegimePlan::Alternate if index.is_multiple_of(2) => HeadlandTexture::Verdant,
            RegimePlan::Alternate => HeadlandTexture::Soil,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `headland_texture` is taken from `regime` per trial.
    pub world: WorldConfig,
    pub regime: RegimePlan,
    pub camera_height: f64,
    pub camera_pitch_deg: f64,
    pub vertical_fov_deg: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub stage: StageConfig,
    pub trials: u64,
    /// Trial `i` runs with seed `seed + i`.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub export_frames: bool,
    /// Worker threads for `simulate`; 0 uses every core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let intr = CameraIntrinsics::default();
        Self {
            world: WorldConfig::default(),
            regime: RegimePlan::Alternate,
            camera_height: CameraPose::default().height,
            camera_pitch_deg: 55.0,
            vertical_fov_deg: 58.0,
            image_width: intr.width,
            image_height: intr.height,
            stage: StageConfig::default(),
            trials: 40,
            seed: 0,
            output_dir: PathBuf::from("out"),
            export_frames: false,
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Camera pose with position 0; trials move it along the track.
    pub fn camera(&self) -> CameraPose {
        CameraPose { height: self.camera_height, pitch: self.camera_pitch_deg.to_radians(), position: 0.0 }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics { vertical_fov: self.vertical_fov_deg.to_radians(), width: self.image_width, height: self.image_height }
    }

    pub fn world_for_trial(&self, index: u64) -> WorldConfig {
        WorldConfig { headland_texture: self.regime.for_trial(index), ..self.world }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        validate_trial(&self.world, &self.camera(), &self.stage, &self.intrinsics())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file on top of the defaults, then applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text).map_err(|e| CliError::Config(format!("{}:{e}", path.display())))?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override `{o}` is not key=value")))?;
            cfg.set(k.trim(), v.trim()).map_err(CliError::Config)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Errors carry the 1-based line number as `line: message`.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), String> {
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("{}: expected key = value", n + 1))?;
            let k = k.trim();
            if seen.contains(&k) {
                return Err(format!("{}: duplicate key `{k}`", n + 1));
            }
            seen.push(k);
            self.set(k, v.trim()).map_err(|e| format!("{}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let entry = KEYS.iter().find(|k| k.name == key).ok_or_else(|| format!("unknown key `{key}`"))?;
        (entry.set)(self, value).map_err(|e| format!("key `{key}`: invalid value `{value}`: {e}"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        KEYS.iter().find(|k| k.name == key).map(|k| (k.get)(self))
    }

    /// Every key with its current value and description; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "# {}\n{} = {}", k.doc, k.name, (k.get)(self));
        }
        out
    }
}

pub struct Key {
    pub name: &'static str,
    pub doc: &'static str,
    set: fn(&mut RunConfig, &str) -> std::result::Result<(), String>,
    get: fn(&RunConfig) -> String,
}

trait Value: Sized {
    fn parse(s: &str) -> std::result::Result<Self, String>;
    fn show(&self) -> String;
}

macro_rules! plain_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn show(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

plain_value!(f64, f32, usize, u32, u64, bool);

impl Value for PathBuf {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        if s.is_empty() {
            return Err("empty path".into());
        }
        Ok(PathBuf::from(s))
    }
    fn show(&self) -> String {
        self.display().to_string()
    }
}

impl Value for RegimePlan {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "alternate" => Ok(RegimePlan::Alternate),
            _ => s.parse().map(RegimePlan::Fixed).map_err(|_| "expected soil, verdant or alternate".into()),
        }
    }
    fn show(&self) -> String {
        match self {
            RegimePlan::Fixed(t) => t.name().into(),
            RegimePlan::Alternate => "alternate".into(),
        }
    }
}

impl Value for MaskMapping {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(MaskMapping::Linear),
            "perspective" => Ok(MaskMapping::Perspective),
            _ => Err("expected linear or perspective".into()),
        }
    }
    fn show(&self) -> String {
        match self {
            MaskMapping::Linear => "linear".into(),
            MaskMapping::Perspective => "perspective".into(),
        }
    }
}

/// `auto` or a positive count.
impl Value for Option<usize> {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(None),
            _ => s.parse().map(Some).map_err(|e| format!("expected auto or a count: {e}")),
        }
    }
    fn show(&self) -> String {
        self.map_or_else(|| "auto".into(), |n| n.to_string())
    }
}

macro_rules! keys {
    ($($name:literal => $($field:ident).+, $doc:literal;)*) => {
        pub static KEYS: &[Key] = &[$(Key {
            name: $name,
            doc: $doc,
            set: |c, v| {
                c.$($field).+ = Value::parse(v)?;
                Ok(())
            },
            get: |c| c.$($field).+.show(),
        }),*];
    };
}

keys! {
    "trials" => trials, "Number of trials run by simulate (at least 1)";
    "seed" => seed, "Master seed; trial i uses seed + i";
    "output_dir" => output_dir, "Directory receiving trials.csv, config.txt and events/";
    "export_frames" => export_frames, "Also write every processed frame as PNG plus a replay manifest (true/false)";
    "threads" => threads, "Worker threads for simulate; 0 = all cores";
    "world.row_length" => world.row_length, "Crop row length before the headland, m";
    "world.row_spacing" => world.row_spacing, "Distance between the two plant rows flanking the robot, m";
    "world.plant_spacing" => world.plant_spacing, "Plant pitch along a row, m";
    "world.plant_height" => world.plant_height, "Plant height, m";
    "world.plant_width" => world.plant_width, "Plant width, m";
    "world.headland_depth" => world.headland_depth, "Headland extent past the row end, m; nothing lies beyond it";
    "world.headland_texture" => regime, "Headland regime per trial: soil, verdant or alternate (verdant on even trials)";
    "world.texture_seed" => world.texture_seed, "Ground texture seed, mixed with each trial seed";
    "world.soil_contrast" => world.soil_contrast, "Michelson contrast of the soil headland texture";
    "world.verdant_contrast" => world.verdant_contrast, "Michelson contrast of the verdant headland texture";
    "world.field_contrast" => world.field_contrast, "Michelson contrast of the in-row ground texture";
    "camera.height" => camera_height, "Camera height above the ground, m";
    "camera.pitch_deg" => camera_pitch_deg, "Optical axis tilt below the horizon, degrees";
    "camera.vertical_fov_deg" => vertical_fov_deg, "Vertical field of view, degrees";
    "camera.width" => image_width, "Image width, px";
    "camera.height_px" => image_height, "Image height, px";
    "stage.linear_velocity" => stage.linear_velocity, "Forward speed, m/s";
    "stage.frame_rate" => stage.frame_rate, "Frames processed per second";
    "stage.max_frames_per_stage" => stage.max_frames_per_stage, "Frames a stage may run before aborting";
    "stage.halt_delay_frames" => stage.halt_delay_frames, "Frame intervals the robot keeps moving after a halting frame";
    "stage.mask_mapping" => stage.mask_mapping, "Stage-2 mask rows: linear (l/D_fov of the rows) or perspective";
    "robot.length" => stage.robot.length, "Robot length l, m";
    "robot.scale" => stage.robot.scale, "Stage-2 travel as a multiple m of the robot length";
    "matcher.k" => stage.matcher.k, "Neighbours per query descriptor; must be 2";
    "matcher.ratio_threshold" => stage.matcher.ratio_threshold, "Ratio test: keep when nearest < ratio x second nearest";
    "matcher.sim_threshold" => stage.matcher.sim_threshold, "Halt when the surviving match count falls below this";
    "features.scales_per_octave" => stage.features.scales_per_octave, "Difference-of-Gaussian scales per octave";
    "features.base_sigma" => stage.features.base_sigma, "Blur of the first pyramid level, px";
    "features.contrast_threshold" => stage.features.contrast_threshold, "Minimum |DoG| of a keypoint (intensities in [0, 1])";
    "features.edge_ratio_threshold" => stage.features.edge_ratio_threshold, "Maximum principal curvature ratio of a keypoint";
    "features.max_octaves" => stage.features.max_octaves, "Octave cap, or auto";
    "features.upsample" => stage.features.upsample, "Double the image before building the pyramid (true/false)";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_agree_with_the_core_defaults() {
        let cfg = RunConfig::default();
        assert!((cfg.camera().pitch - CameraPose::default().pitch).abs() < 1e-15);
        assert!((cfg.intrinsics().vertical_fov - CameraIntrinsics::default().vertical_fov).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("world.row_length", "7.25").unwrap();
        cfg.set("features.max_octaves", "3").unwrap();
        cfg.set("world.headland_texture", "soil").unwrap();
        cfg.set("matcher.ratio_threshold", "0.65").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn key_names_are_unique() {
        for (i, k) in KEYS.iter().enumerate() {
            assert!(KEYS[i + 1..].iter().all(|o| o.name != k.name), "{}", k.name);
        }
    }
}
