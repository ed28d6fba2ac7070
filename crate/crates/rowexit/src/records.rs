//! On-disk record formats: the trial CSV row, event-log lines and replay
//! manifest entries.

use std::io::Write;

use rowexit_core::headland::HeadlandSpan;
use rowexit_core::image::CropMask;
use rowexit_core::pipeline::PipelineEvent;
use rowexit_core::sim::{DriverStatus, TrialResult};
use rowexit_core::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Columns of `trials.csv`, in order.
pub const TRIAL_COLUMNS: [&str; 6] = ["seed", "stage1_error_m", "stage2_error_m", "abort", "frames", "regime"];

/// One row of `trials.csv`. Missing errors are empty cells; `abort` is empty
/// for completed trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub stage1_error_m: Option<f64>,
    pub stage2_error_m: Option<f64>,
    pub abort: String,
    pub frames: usize,
    pub regime: String,
}

impl TrialRow {
    pub fn from_result(r: &TrialResult) -> Self {
        Self {
            seed: r.seed,
            stage1_error_m: r.stage1_halt_error,
            stage2_error_m: r.stage2_travel_error,
            abort: r.abort.as_ref().map_or_else(String::new, |e| abort_kind(e).into()),
            frames: r.frames(),
            regime: r.regime.name().into(),
        }
    }
}

pub fn abort_kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::BadDimensions { .. } => "bad_dimensions",
        CoreError::DimensionMismatch { .. } => "dimension_mismatch",
        CoreError::InvalidMask { .. } => "invalid_mask",
        CoreError::ImageTooSmall { .. } => "image_too_small",
        CoreError::WindowOutOfBounds => "window_out_of_bounds",
        CoreError::FlatNeighborhood => "flat_neighborhood",
        CoreError::InsufficientDepth { .. } => "insufficient_depth",
        CoreError::HeadlandTooShort { .. } => "headland_too_short",
        CoreError::PhaseViolation { .. } => "phase_violation",
        CoreError::FrameLimit { .. } => "frame_limit",
        CoreError::InvalidConfig(_) => "invalid_config",
    }
}

pub fn status_name(s: DriverStatus) -> &'static str {
    match s {
        DriverStatus::AwaitingTrigger => "awaiting_trigger",
        DriverStatus::Stage1 => "stage1",
        DriverStatus::AwaitingStage2Init => "awaiting_stage2_init",
        DriverStatus::Stage2 => "stage2",
        DriverStatus::Done => "done",
        DriverStatus::Aborted => "aborted",
    }
}

fn mask_json(m: &CropMask) -> Value {
    json!({ "row_start": m.row_start, "row_end": m.row_end })
}

fn span_json(s: &HeadlandSpan) -> Value {
    json!({ "d1_m": s.d1, "d2_m": s.d2, "d_fov_m": s.d_fov, "alpha_rad": s.alpha, "top_row": s.top_row })
}

pub fn event_json(e: &PipelineEvent) -> Value {
    match e {
        PipelineEvent::Trigger { frame, time_s, mask, reference_features } => json!({
            "type": "trigger", "frame": frame, "time_s": time_s,
            "mask": mask_json(mask), "reference_features": reference_features,
        }),
        PipelineEvent::Step { stage, frame, time_s, score, halt, current_features } => json!({
            "type": "step", "stage": stage, "frame": frame, "time_s": time_s,
            "score": score.value(), "halt": halt, "current_features": current_features,
        }),
        PipelineEvent::Stage2Init { frame, time_s, span, mask, reference_features } => json!({
            "type": "stage2_init", "frame": frame, "time_s": time_s, "span": span_json(span),
            "mask": mask_json(mask), "reference_features": reference_features,
        }),
    }
}

/// Decision-level outcome shared by simulated and replayed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<'a> {
    pub status: DriverStatus,
    pub stage1_error_m: Option<f64>,
    pub stage2_error_m: Option<f64>,
    pub span: Option<&'a HeadlandSpan>,
    pub frames: usize,
    pub abort: Option<&'a CoreError>,
}

pub fn outcome_json(o: &RunOutcome<'_>) -> Value {
    json!({
        "type": "end",
        "status": status_name(o.status),
        "frames": o.frames,
        "stage1_error_m": o.stage1_error_m,
        "stage2_error_m": o.stage2_error_m,
        "span": o.span.map(span_json),
        "abort": o.abort.map(|e| json!({ "kind": abort_kind(e), "message": e.to_string() })),
    })
}

/// Event log: one JSON object per pipeline event, closed by the outcome.
pub fn write_event_log(out: &mut impl Write, events: &[PipelineEvent], outcome: &RunOutcome<'_>) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut *out, &event_json(e))?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *out, &outcome_json(outcome))?;
    out.write_all(b"\n")
}

/// One line of a replay manifest. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub frame_id: u64,
    pub rgb_path: String,
    pub depth_path: String,
    /// Robot front relative to the row end, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odom_position_m: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub eor_trigger: bool,
}
