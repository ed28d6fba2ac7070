use std::path::Path;

use rowexit_core::headland::CameraIntrinsics;
use rowexit_core::sim::{DriveOutcome, FrameDriver};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::load_rgb_depth_pair;
use crate::records::{ManifestRecord, RunOutcome};

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, reason: String| CliError::Manifest { path: path.into(), line, reason };
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str::<ManifestRecord>(line).map_err(|e| bad(n + 1, e.to_string()))?);
    }
    if records.is_empty() {
        return Err(bad(0, "manifest has no frames".into()));
    }
    if !records.iter().any(|r| r.eor_trigger) {
        return Err(bad(0, "no record carries eor_trigger, the pipeline cannot start".into()));
    }
    Ok(records)
}

/// Feeds the manifest's frames to the pipeline in order. Errors against
/// ground truth are only available where `odom_position_m` is recorded.
/// Camera resolution comes from the frames, the field of view from `cfg`.
pub fn replay(manifest: &Path, cfg: &RunConfig) -> Result<DriveOutcome> {
    let records = read_manifest(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new(""));
    let mut driver: Option<FrameDriver> = None;
    for r in &records {
        let (rgb, depth) = load_rgb_depth_pair(&dir.join(&r.rgb_path), &dir.join(&r.depth_path))?;
        let driver = match &mut driver {
            Some(d) => d,
            None => {
                let intr = CameraIntrinsics::new(cfg.vertical_fov_deg.to_radians(), rgb.width(), rgb.height())
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let d = FrameDriver::new(cfg.stage, intr).map_err(|e| CliError::Config(e.to_string()))?;
                driver.insert(d)
            }
        };
        driver.feed(&rgb, &depth, r.eor_trigger, r.odom_position_m);
        if driver.is_finished() {
            break;
        }
    }
    Ok(driver.expect("manifest is not empty").finish())
}

pub fn drive_outcome(o: &DriveOutcome) -> RunOutcome<'_> {
    RunOutcome {
        status: o.status,
        stage1_error_m: o.stage1_halt_error,
        stage2_error_m: o.stage2_travel_error,
        span: o.span.as_ref(),
        frames: o.trace.len(),
        abort: o.abort.as_ref(),
    }
}
