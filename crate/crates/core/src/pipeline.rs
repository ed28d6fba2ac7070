//! Row-exit state machine.
//!
//! ```text
//! Idle --EOR trigger--> Stage1 (A) --halt--> Stage1 (B) --depth--> Stage2 --halt--> Done (C)
//! ```
//!
//! Both stages keep a cropped reference frame and halt on the first frame
//! whose similarity score falls below the matcher threshold. A stage that
//! never halts fails with [`Error::FrameLimit`] after
//! [`StageConfig::max_frames_per_stage`] frames.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::features::{detect_and_describe, Feature, FeatureParams};
use crate::headland::{estimate_span, stage2_mask_with, CameraIntrinsics, HeadlandSpan, MaskMapping, RobotGeometry};
use crate::image::{rgb_to_gray, CropMask, CropRows, DepthImage, GrayImage, RgbImage};
use crate::matching::{score_features, MatcherConfig, SimScore};
use crate::{Error, Result};

/// Minimum number of rows left below the end-of-row line.
pub const MIN_CROP_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    /// Forward speed, m/s.
    pub linear_velocity: f64,
    /// Frames processed per second.
    pub frame_rate: f64,
    pub matcher: MatcherConfig,
    pub features: FeatureParams,
    pub robot: RobotGeometry,
    pub mask_mapping: MaskMapping,
    pub max_frames_per_stage: usize,
    /// Frame intervals the robot keeps moving after capturing the frame that
    /// triggers a halt: the decision is only known once that frame is processed.
    pub halt_delay_frames: u32,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            linear_velocity: 0.15,
            frame_rate: 1.5,
            matcher: MatcherConfig::default(),
            features: FeatureParams::default(),
            robot: RobotGeometry::default(),
            mask_mapping: MaskMapping::Perspective,
            max_frames_per_stage: 60,
            halt_delay_frames: 1,
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.linear_velocity > 0.0) || !self.linear_velocity.is_finite() {
            return Err(Error::InvalidConfig("linear_velocity must be positive"));
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return Err(Error::InvalidConfig("frame_rate must be positive"));
        }
        if self.max_frames_per_stage == 0 {
            return Err(Error::InvalidConfig("max_frames_per_stage must be at least 1"));
        }
        self.matcher.validate()?;
        self.features.validate()?;
        self.robot.validate()
    }

    /// Distance covered between consecutive frames, meters.
    pub fn step_distance(&self) -> f64 {
        self.linear_velocity / self.frame_rate
    }

    /// Distance covered between a halting frame and standstill, meters.
    pub fn halt_overrun(&self) -> f64 {
        f64::from(self.halt_delay_frames) * self.step_distance()
    }
}

/// External end-of-row detection: image row where the row end currently sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EorEvent {
    pub y_eor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StateLabel {
    /// End of row detected.
    A,
    /// Robot front at the end of row.
    B,
    /// Robot fully inside the headland.
    C,
}

/// Cropped reference frame and its features.
#[derive(Debug, Clone)]
pub struct Reference {
    pub image: GrayImage,
    pub mask: CropMask,
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone)]
pub enum Phase {
    Idle,
    Stage1(Reference),
    Stage2(Reference),
    Done,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Stage1(_) => "stage1",
            Phase::Stage2(_) => "stage2",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraversalState {
    pub phase: Phase,
    /// Last state reached, `None` before the trigger.
    pub label: Option<StateLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Continue(SimScore),
    Halt(SimScore),
}

impl StepDecision {
    pub fn score(&self) -> SimScore {
        match *self {
            StepDecision::Continue(s) | StepDecision::Halt(s) => s,
        }
    }

    pub fn is_halt(&self) -> bool {
        matches!(self, StepDecision::Halt(_))
    }
}

/// One entry of the pipeline event log. `frame` counts frames consumed since
/// the trigger (the trigger frame is 0); `time_s` is `frame / frame_rate`.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineEvent {
    Trigger { frame: u64, time_s: f64, mask: CropMask, reference_features: usize },
    Step { stage: u8, frame: u64, time_s: f64, score: SimScore, halt: bool, current_features: usize },
    Stage2Init { frame: u64, time_s: f64, span: HeadlandSpan, mask: CropMask, reference_features: usize },
}

/// A single row-exit run. Frames must be fed strictly in capture order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: StageConfig,
    state: TraversalState,
    frame_size: (usize, usize),
    frames: u64,
    stage_frames: usize,
    events: Vec<PipelineEvent>,
}

impl Pipeline {
    pub fn new(cfg: StageConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: TraversalState { phase: Phase::Idle, label: None },
            frame_size: (0, 0),
            frames: 0,
            stage_frames: 0,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &StageConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TraversalState {
        &self.state
    }

    pub fn events(&self) -> &[PipelineEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<PipelineEvent> {
        core::mem::take(&mut self.events)
    }

    fn time(&self, frame: u64) -> f64 {
        frame as f64 / self.cfg.frame_rate
    }

    fn violation(&self, operation: &'static str) -> Error {
        Error::PhaseViolation { operation, phase: self.state.phase.name() }
    }

    fn check_size(&self, rgb: &RgbImage) -> Result<()> {
        if (rgb.width(), rgb.height()) != self.frame_size {
            return Err(Error::DimensionMismatch { expected: self.frame_size, actual: (rgb.width(), rgb.height()) });
        }
        Ok(())
    }

    fn make_reference(&self, rgb: &RgbImage, mask: CropMask) -> Result<Reference> {
        let image = rgb_to_gray(rgb).crop_rows(mask)?;
        let features = detect_and_describe(&image, &self.cfg.features)?;
        Ok(Reference { image, mask, features })
    }

    /// Starts stage 1: the reference is the part of `rgb` below the end-of-row line.
    pub fn on_eor_trigger(&mut self, rgb: &RgbImage, event: EorEvent) -> Result<()> {
        if !matches!(self.state.phase, Phase::Idle) {
            return Err(self.violation("on_eor_trigger"));
        }
        let height = rgb.height();
        if event.y_eor >= height || height - event.y_eor < MIN_CROP_ROWS {
            return Err(Error::InvalidMask { row_start: event.y_eor, row_end: height, height });
        }
        let mask = CropMask::new(event.y_eor, height);
        self.frame_size = (rgb.width(), height);
        let reference = self.make_reference(rgb, mask)?;
        self.frames = 0;
        self.stage_frames = 0;
        self.events.push(PipelineEvent::Trigger {
            frame: 0,
            time_s: 0.0,
            mask,
            reference_features: reference.features.len(),
        });
        self.state = TraversalState { phase: Phase::Stage1(reference), label: Some(StateLabel::A) };
        Ok(())
    }

    fn step(&mut self, stage: u8, rgb: &RgbImage) -> Result<StepDecision> {
        self.check_size(rgb)?;
        let reference = match (&self.state.phase, stage) {
            (Phase::Stage1(r), 1) | (Phase::Stage2(r), 2) => r,
            _ => unreachable!("phase checked by caller"),
        };
        let current = detect_and_describe(&rgb_to_gray(rgb).crop_rows(reference.mask)?, &self.cfg.features)?;
        let score = score_features(&reference.features, &current, &self.cfg.matcher);
        let halt = self.cfg.matcher.halts(score);

        self.frames += 1;
        self.stage_frames += 1;
        self.events.push(PipelineEvent::Step {
            stage,
            frame: self.frames,
            time_s: self.time(self.frames),
            score,
            halt,
            current_features: current.len(),
        });
        if halt {
            return Ok(StepDecision::Halt(score));
        }
        if self.stage_frames >= self.cfg.max_frames_per_stage {
            return Err(Error::FrameLimit { stage, frames: self.stage_frames });
        }
        Ok(StepDecision::Continue(score))
    }

    /// Scores `rgb` against the stage-1 reference; on halt the robot is at B.
    pub fn stage1_step(&mut self, rgb: &RgbImage) -> Result<StepDecision> {
        if !matches!(self.state.phase, Phase::Stage1(_)) || self.state.label != Some(StateLabel::A) {
            return Err(self.violation("stage1_step"));
        }
        let decision = self.step(1, rgb)?;
        if decision.is_halt() {
            self.state.label = Some(StateLabel::B);
        }
        Ok(decision)
    }

    /// Starts stage 2 from the frame and depth captured at B.
    pub fn stage2_init(&mut self, rgb: &RgbImage, depth: &DepthImage, intr: &CameraIntrinsics) -> Result<HeadlandSpan> {
        if !matches!(self.state.phase, Phase::Stage1(_)) || self.state.label != Some(StateLabel::B) {
            return Err(self.violation("stage2_init"));
        }
        self.check_size(rgb)?;
        let span = estimate_span(depth, intr)?;
        let mask = stage2_mask_with(self.cfg.mask_mapping, &span, &self.cfg.robot, intr)?;
        let reference = self.make_reference(rgb, mask)?;
        self.stage_frames = 0;
        self.events.push(PipelineEvent::Stage2Init {
            frame: self.frames,
            time_s: self.time(self.frames),
            span,
            mask,
            reference_features: reference.features.len(),
        });
        self.state.phase = Phase::Stage2(reference);
        Ok(span)
    }

    /// Scores `rgb` against the stage-2 reference; on halt the exit is complete.
    pub fn stage2_step(&mut self, rgb: &RgbImage) -> Result<StepDecision> {
        if !matches!(self.state.phase, Phase::Stage2(_)) {
            return Err(self.violation("stage2_step"));
        }
        let decision = self.step(2, rgb)?;
        if decision.is_halt() {
            self.state = TraversalState { phase: Phase::Done, label: Some(StateLabel::C) };
        }
        Ok(decision)
    }
}

/// Outcome of driving stage 2 by dead reckoning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryRun {
    pub steps: usize,
    /// Realized displacement, meters.
    pub traveled: f64,
    /// `traveled − L`, meters.
    pub error: f64,
}

/// Dead-reckoning baseline for stage 2.
///
/// The robot advances in steps of `step_distance` until the commanded distance
/// reaches `L = m · l`. The realized displacement differs from the commanded
/// one by a single Gaussian end-point error with standard deviation `noise_std`.
pub fn odometry_stage2<R: Rng + ?Sized>(
    robot: &RobotGeometry,
    step_distance: f64,
    noise_std: f64,
    rng: &mut R,
) -> Result<OdometryRun> {
    robot.validate()?;
    if !(step_distance > 0.0) {
        return Err(Error::InvalidConfig("step_distance must be positive"));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidConfig("noise_std must be non-negative"));
    }
    let target = robot.target_distance();
    // Tolerance keeps exact multiples (1.2 m in 0.1 m steps) from taking an extra step.
    let steps = libm::ceil(target / step_distance - 1e-9).max(0.0) as usize;
    let commanded = steps as f64 * step_distance;
    let noise = if noise_std > 0.0 {
        Normal::new(0.0, noise_std).map_err(|_| Error::InvalidConfig("noise_std"))?.sample(rng)
    } else {
        0.0
    };
    let traveled = commanded + noise;
    Ok(OdometryRun { steps, traveled, error: traveled - target })
}
