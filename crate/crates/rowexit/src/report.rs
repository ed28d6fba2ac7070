use std::collections::BTreeMap;
use std::path::Path;

use rowexit_core::stats::{median_abs, positive_fraction};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::records::{TrialRow, TRIAL_COLUMNS};

pub const SCHEMA_VERSION: u32 = 1;

/// Statistics over the trials that produced an error value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    pub count: usize,
    pub median_abs_error: f64,
    pub positive_error_fraction: f64,
}

impl ErrorStats {
    pub fn of(errors: &[f64]) -> Option<Self> {
        Some(Self {
            count: errors.len(),
            median_abs_error: median_abs(errors)?,
            positive_error_fraction: positive_fraction(errors)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageStats {
    pub trials: usize,
    pub aborted: usize,
    pub stage1: Option<ErrorStats>,
    pub stage2: Option<ErrorStats>,
}

impl StageStats {
    fn of<'a>(rows: impl Iterator<Item = &'a TrialRow> + Clone) -> Self {
        let s1: Vec<f64> = rows.clone().filter_map(|r| r.stage1_error_m).collect();
        let s2: Vec<f64> = rows.clone().filter_map(|r| r.stage2_error_m).collect();
        Self {
            trials: rows.clone().count(),
            aborted: rows.filter(|r| !r.abort.is_empty()).count(),
            stage1: ErrorStats::of(&s1),
            stage2: ErrorStats::of(&s2),
        }
    }
}

/// Errors in metres. Medians of an even count average the two middle values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateStats {
    pub schema_version: u32,
    #[serde(flatten)]
    pub overall: StageStats,
    pub per_regime: BTreeMap<String, StageStats>,
}

pub fn aggregate(rows: &[TrialRow]) -> AggregateStats {
    let mut regimes: Vec<&str> = rows.iter().map(|r| r.regime.as_str()).collect();
    regimes.sort_unstable();
    regimes.dedup();
    AggregateStats {
        schema_version: SCHEMA_VERSION,
        overall: StageStats::of(rows.iter()),
        per_regime: regimes
            .into_iter()
            .map(|g| (g.to_string(), StageStats::of(rows.iter().filter(move |r| r.regime == g))))
            .collect(),
    }
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>> {
    let schema = |reason: String| CliError::Schema { path: path.into(), reason };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        k => schema(format!("{k:?}")),
    })?;
    let header = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    if header.is_empty() {
        return Err(CliError::EmptyInput { path: path.into() });
    }
    for col in TRIAL_COLUMNS {
        if !header.iter().any(|h| h == col) {
            return Err(schema(format!("missing column `{col}`")));
        }
    }
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<TrialRow>().enumerate() {
        rows.push(row.map_err(|e| schema(format!("row {}: {e}", i + 1)))?);
    }
    if rows.is_empty() {
        return Err(CliError::EmptyInput { path: path.into() });
    }
    Ok(rows)
}

pub fn report(path: &Path) -> Result<AggregateStats> {
    Ok(aggregate(&read_trials(path)?))
}
