use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::render_frame;
use super::texture::mix;
use super::world::{CameraPose, HeadlandTexture, WorldConfig};
use crate::headland::{CameraIntrinsics, HeadlandSpan};
use crate::image::{DepthImage, RgbImage};
use crate::pipeline::{EorEvent, Pipeline, PipelineEvent, StageConfig};
use crate::{Error, Result};

/// One scored frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub stage: u8,
    /// Frames since the trigger frame.
    pub frame: u64,
    pub score: usize,
    pub halt: bool,
    /// Robot front relative to the row end, meters, when known.
    pub position: Option<f64>,
}

/// Ground-truth outcome of one row exit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub regime: HeadlandTexture,
    /// Where the exit sequence ended.
    pub status: DriverStatus,
    /// Distance between the start pose and the trigger pose, meters.
    pub start_offset: f64,
    /// Front position at the stage-1 halt minus the row end; positive = overshoot.
    pub stage1_halt_error: Option<f64>,
    /// Stage-2 travel minus the target distance.
    pub stage2_travel_error: Option<f64>,
    pub span: Option<HeadlandSpan>,
    /// Every scored frame, in order; its length is the number of frames processed.
    pub trace: Vec<TraceEntry>,
    pub events: Vec<PipelineEvent>,
    pub abort: Option<Error>,
}

impl TrialResult {
    pub fn frames(&self) -> usize {
        self.trace.len()
    }
}

/// Where a [`FrameDriver`] is in the exit sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverStatus {
    AwaitingTrigger,
    Stage1,
    /// Stage 1 halted; the next frame is captured at standstill and starts stage 2.
    AwaitingStage2Init,
    Stage2,
    Done,
    Aborted,
}

/// Feeds a frame sequence through the pipeline: the flagged trigger frame
/// starts stage 1, the first frame after the stage-1 halt initializes stage 2.
#[derive(Debug)]
pub struct FrameDriver {
    pipeline: Pipeline,
    intr: CameraIntrinsics,
    status: DriverStatus,
    trace: Vec<TraceEntry>,
    stop_b: Option<Option<f64>>,
    halt_c: Option<Option<f64>>,
    span: Option<HeadlandSpan>,
    abort: Option<Error>,
}

/// Decision-level summary of a driven sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveOutcome {
    pub status: DriverStatus,
    pub stage1_halt_error: Option<f64>,
    pub stage2_travel_error: Option<f64>,
    pub span: Option<HeadlandSpan>,
    pub trace: Vec<TraceEntry>,
    pub events: Vec<PipelineEvent>,
    pub abort: Option<Error>,
}

impl FrameDriver {
    pub fn new(cfg: StageConfig, intr: CameraIntrinsics) -> Result<Self> {
        intr.validate()?;
        Ok(Self {
            pipeline: Pipeline::new(cfg)?,
            intr,
            status: DriverStatus::AwaitingTrigger,
            trace: Vec::new(),
            stop_b: None,
            halt_c: None,
            span: None,
            abort: None,
        })
    }

    pub fn status(&self) -> DriverStatus {
        self.status
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.status, DriverStatus::Done | DriverStatus::Aborted)
    }

    /// Consumes one frame. `position` is the robot front relative to the row
    /// end when ground truth is available. Pipeline errors end the run and are
    /// kept as the abort reason.
    pub fn feed(&mut self, rgb: &RgbImage, depth: &DepthImage, trigger: bool, position: Option<f64>) {
        if let Err(e) = self.try_feed(rgb, depth, trigger, position) {
            self.abort = Some(e);
            self.status = DriverStatus::Aborted;
        }
    }

    fn try_feed(&mut self, rgb: &RgbImage, depth: &DepthImage, trigger: bool, position: Option<f64>) -> Result<()> {
        match self.status {
            DriverStatus::AwaitingTrigger if trigger => {
                self.pipeline.on_eor_trigger(rgb, EorEvent { y_eor: rgb.height() / 2 })?;
                self.status = DriverStatus::Stage1;
            }
            DriverStatus::Stage1 => {
                let d = self.pipeline.stage1_step(rgb)?;
                self.push_trace(1, d.score().value(), d.is_halt(), position);
                if d.is_halt() {
                    self.status = DriverStatus::AwaitingStage2Init;
                }
            }
            DriverStatus::AwaitingStage2Init => {
                self.stop_b = Some(position);
                self.span = Some(self.pipeline.stage2_init(rgb, depth, &self.intr)?);
                self.status = DriverStatus::Stage2;
            }
            DriverStatus::Stage2 => {
                let d = self.pipeline.stage2_step(rgb)?;
                self.push_trace(2, d.score().value(), d.is_halt(), position);
                if d.is_halt() {
                    self.halt_c = Some(position);
                    self.status = DriverStatus::Done;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn push_trace(&mut self, stage: u8, score: usize, halt: bool, position: Option<f64>) {
        let frame = self.trace.len() as u64 + 1;
        self.trace.push(TraceEntry { stage, frame, score, halt, position });
    }

    /// Errors against ground truth: stage 1 from where stage 2 started, stage 2
    /// from the halting frame plus the overrun while it was processed.
    pub fn finish(mut self) -> DriveOutcome {
        let cfg = self.pipeline.config();
        let (target, overrun) = (cfg.robot.target_distance(), cfg.halt_overrun());
        let b = self.stop_b.flatten();
        let stage2 = match (b, self.halt_c.flatten()) {
            (Some(b), Some(c)) => Some(c + overrun - b - target),
            _ => None,
        };
        DriveOutcome {
            status: self.status,
            stage1_halt_error: b,
            stage2_travel_error: stage2,
            span: self.span,
            trace: self.trace,
            events: self.pipeline.take_events(),
            abort: self.abort,
        }
    }
}

/// A rendered frame handed to a [`run_trial_observed`] observer.
#[derive(Debug, Clone, Copy)]
pub struct TrialFrame<'a> {
    /// Index from the start pose; frames before the trigger are skipped.
    pub frame_id: u64,
    /// Robot front relative to the row end, meters.
    pub position: f64,
    pub trigger: bool,
    pub rgb: &'a RgbImage,
    pub depth: &'a DepthImage,
}

/// Checks that the trial geometry is usable: the optical axis meets the
/// ground and the bottom image edge looks ahead of the camera.
pub fn validate_trial(world: &WorldConfig, camera: &CameraPose, cfg: &StageConfig, intr: &CameraIntrinsics) -> Result<()> {
    world.validate()?;
    camera.validate()?;
    cfg.validate()?;
    intr.validate()?;
    if camera.pitch + intr.vertical_fov / 2.0 >= core::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidConfig("bottom image edge must look ahead of the camera"));
    }
    Ok(())
}

/// Runs one seeded row exit against the rendered world.
pub fn run_trial(
    world: &WorldConfig,
    camera: &CameraPose,
    cfg: &StageConfig,
    intr: &CameraIntrinsics,
    seed: u64,
) -> Result<TrialResult> {
    run_trial_observed(world, camera, cfg, intr, seed, |_| {})
}

/// [`run_trial`] that shows every processed frame to `observer`.
///
/// The robot starts a uniformly drawn distance in [0, 1) m before the trigger
/// pose, where the row end sits on the middle image row, and moves exactly
/// `linear_velocity / frame_rate` per frame. The first frame at or past the
/// trigger pose carries the trigger. After a stage-1 halt the robot overruns
/// by `halt_delay_frames` steps and captures the stage-2 reference there. The
/// robot front is the ground point seen by the bottom image edge. The seed
/// also reseeds the ground texture, so every trial sees a different field.
pub fn run_trial_observed(
    world: &WorldConfig,
    camera: &CameraPose,
    cfg: &StageConfig,
    intr: &CameraIntrinsics,
    seed: u64,
    mut observer: impl FnMut(TrialFrame<'_>),
) -> Result<TrialResult> {
    validate_trial(world, camera, cfg, intr)?;
    let world = &WorldConfig { texture_seed: world.texture_seed ^ mix(seed), ..*world };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start_offset: f64 = rng.random::<f64>();

    let trigger_x = world.row_length - camera.axis_ground_distance();
    let start_x = trigger_x - start_offset;
    let step = cfg.step_distance();
    let front = camera.front_offset(intr);
    let first = libm::ceil((trigger_x - start_x) / step - 1e-12).max(0.0) as u64;
    // Stage 1 travels about the visible half-frame of ground and stage 2 one
    // target distance; the pipeline's own frame limit bounds each stage.
    let budget = first + 2 * cfg.max_frames_per_stage as u64 + u64::from(cfg.halt_delay_frames) + 2;

    let mut driver = FrameDriver::new(*cfg, *intr)?;
    let mut k = first;
    while k < budget {
        let x = start_x + k as f64 * step;
        let (rgb, depth) = render_frame(world, &camera.at(x), intr);
        let position = x + front - world.row_length;
        let trigger = k == first;
        observer(TrialFrame { frame_id: k, position, trigger, rgb: &rgb, depth: &depth });
        driver.feed(&rgb, &depth, trigger, Some(position));
        if driver.is_finished() {
            break;
        }
        k += match driver.status() {
            DriverStatus::AwaitingStage2Init => u64::from(cfg.halt_delay_frames),
            _ => 1,
        };
    }
    let out = driver.finish();
    Ok(TrialResult {
        seed,
        regime: world.headland_texture,
        status: out.status,
        start_offset,
        stage1_halt_error: out.stage1_halt_error,
        stage2_travel_error: out.stage2_travel_error,
        span: out.span,
        trace: out.trace,
        events: out.events,
        abort: out.abort,
    })
}
