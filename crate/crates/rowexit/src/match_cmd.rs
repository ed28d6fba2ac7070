use std::path::Path;

use rowexit_core::image::{rgb_to_gray, CropMask};
use rowexit_core::matching::{lfsm_report, LfsmReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::load_rgb;

/// One 2-NN match of a reference keypoint; coordinates are in the cropped frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchRow {
    pub query_index: usize,
    pub train_index: usize,
    pub query_x: f32,
    pub query_y: f32,
    pub train_x: f32,
    pub train_y: f32,
    pub distance: f32,
    pub second_distance: f32,
    pub kept: bool,
}

/// Parses `start:end` image rows (end exclusive).
pub fn parse_rows(s: &str) -> Result<CropMask> {
    let bad = || CliError::Config(format!("rows `{s}` must be start:end"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok(CropMask::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// Scores image B against reference image A over the same rows of both.
pub fn match_images(a: &Path, b: &Path, rows: Option<CropMask>, cfg: &RunConfig) -> Result<(LfsmReport, Vec<MatchRow>)> {
    let (ga, gb) = (rgb_to_gray(&load_rgb(a)?), rgb_to_gray(&load_rgb(b)?));
    let mask = rows.unwrap_or_else(|| CropMask::full(ga.height()));
    for h in [ga.height(), gb.height()] {
        mask.validate(h).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let report = lfsm_report(&ga, &gb, mask, &cfg.stage.features, &cfg.stage.matcher)?;
    let rows = report
        .matches
        .iter()
        .map(|m| {
            let (q, t) = (&report.reference[m.query_index].keypoint, &report.current[m.train_index].keypoint);
            MatchRow {
                query_index: m.query_index,
                train_index: m.train_index,
                query_x: q.x,
                query_y: q.y,
                train_x: t.x,
                train_y: t.y,
                distance: m.distance,
                second_distance: m.second_distance,
                kept: report.kept(m, &cfg.stage.matcher),
            }
        })
        .collect();
    Ok((report, rows))
}

pub fn write_matches(path: &Path, rows: &[MatchRow]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
