use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rowexit_core::sim::{run_trial_observed, TrialFrame, TrialResult};
use rowexit_core::stats::{median_abs, positive_fraction};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{save_depth, save_rgb};
use crate::records::{write_event_log, ManifestRecord, RunOutcome, TrialRow};

pub struct SimulateOutput {
    pub rows: Vec<TrialRow>,
    pub csv_path: PathBuf,
}

pub fn trial_outcome(r: &TrialResult) -> RunOutcome<'_> {
    RunOutcome {
        status: r.status,
        stage1_error_m: r.stage1_halt_error,
        stage2_error_m: r.stage2_travel_error,
        span: r.span.as_ref(),
        frames: r.frames(),
        abort: r.abort.as_ref(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes each frame as it is rendered and collects the manifest lines.
struct FrameExport {
    dir: PathBuf,
    records: Vec<ManifestRecord>,
    error: Option<CliError>,
}

impl FrameExport {
    fn save(&mut self, f: &TrialFrame<'_>) -> Result<()> {
        let rgb_path = format!("{:05}_rgb.png", f.frame_id);
        let depth_path = format!("{:05}_depth.png", f.frame_id);
        save_rgb(&self.dir.join(&rgb_path), f.rgb)?;
        save_depth(&self.dir.join(&depth_path), f.depth)?;
        self.records.push(ManifestRecord {
            frame_id: f.frame_id,
            rgb_path,
            depth_path,
            odom_position_m: Some(f.position),
            eor_trigger: f.trigger,
        });
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let path = self.dir.join("manifest.jsonl");
        let mut out = create(&path)?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(|e| CliError::io(&path, e.into()))?;
            out.write_all(b"\n").map_err(|e| CliError::io(&path, e))?;
        }
        out.flush().map_err(|e| CliError::io(&path, e))
    }
}

fn run_one(cfg: &RunConfig, index: u64) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(index);
    let world = cfg.world_for_trial(index);
    let (camera, intr) = (cfg.camera(), cfg.intrinsics());
    let mut export = cfg.export_frames.then(|| FrameExport {
        dir: cfg.output_dir.join("frames").join(format!("seed_{seed}")),
        records: Vec::new(),
        error: None,
    });
    if let Some(x) = &export {
        mkdir(&x.dir)?;
    }
    let result = run_trial_observed(&world, &camera, &cfg.stage, &intr, seed, |f| {
        if let Some(x) = export.as_mut().filter(|x| x.error.is_none()) {
            if let Err(e) = x.save(&f) {
                x.error = Some(e);
            }
        }
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(x) = export {
        x.finish()?;
    }

    let path = cfg.output_dir.join("events").join(format!("seed_{seed}.jsonl"));
    let mut log = create(&path)?;
    write_event_log(&mut log, &result.events, &trial_outcome(&result)).map_err(|e| CliError::io(&path, e))?;
    log.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(result)
}

/// Runs the configured batch and writes `trials.csv`, `config.txt` and one
/// event log per trial. Rows come out in seed order whatever the thread count.
pub fn simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    mkdir(&cfg.output_dir.join("events"))?;
    let config_path = cfg.output_dir.join("config.txt");
    fs::write(&config_path, cfg.to_text()).map_err(|e| CliError::io(&config_path, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<TrialResult>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_one(cfg, i)).collect());

    let csv_path = cfg.output_dir.join("trials.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| csv_io(&csv_path, e))?;
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let row = TrialRow::from_result(&r?);
        writer.serialize(&row).map_err(|e| csv_io(&csv_path, e))?;
        rows.push(row);
    }
    writer.flush().map_err(|e| CliError::io(&csv_path, e))?;
    Ok(SimulateOutput { rows, csv_path })
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// Short human-readable summary, errors in centimetres.
pub fn summary(rows: &[TrialRow]) -> String {
    let cm = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1} cm", 100.0 * v));
    let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
    let s1: Vec<f64> = rows.iter().filter_map(|r| r.stage1_error_m).collect();
    let s2: Vec<f64> = rows.iter().filter_map(|r| r.stage2_error_m).collect();
    let aborted = rows.iter().filter(|r| !r.abort.is_empty()).count();
    format!(
        "{} trials, {aborted} aborted\nstage 1: median |error| {}, positive {}\nstage 2: median |error| {}, positive {}",
        rows.len(),
        cm(median_abs(&s1)),
        pct(positive_fraction(&s1)),
        cm(median_abs(&s2)),
        pct(positive_fraction(&s2)),
    )
}
