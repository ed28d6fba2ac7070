use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::match_cmd::{match_images, parse_rows, write_matches};
use crate::records::{outcome_json, write_event_log};
use crate::replay::{drive_outcome, replay};
use crate::report::report;
use crate::simulate::{simulate, summary};

#[derive(Debug, Parser)]
#[command(name = "rowexit", version, about = "Vision-only crop-row exit: simulate, replay, match, report")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded trials in the synthetic field; writes trials.csv and event logs.
    Simulate {
        config: Option<PathBuf>,
        /// Override a config key, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Feed a recorded frame sequence (JSON-lines manifest) through the pipeline.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the JSON-lines event log here.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Score image B against reference image A.
    Match {
        reference: PathBuf,
        current: PathBuf,
        /// Crop both images to rows `start:end` (end exclusive).
        #[arg(long)]
        rows: Option<String>,
        /// Per-match CSV output.
        #[arg(long, default_value = "matches.csv")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Aggregate a trials CSV into JSON statistics.
    Report {
        csv: PathBuf,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every configuration key with its default and meaning.
    Keys,
}

/// Runs one command, printing to `out`; returns the process exit code.
pub fn run(cli: Cli, out: &mut impl Write) -> u8 {
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rowexit: {e}");
            e.exit_code()
        }
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn execute(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Simulate { config, overrides } => {
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            let result = simulate(&cfg)?;
            writeln!(out, "{}\nwrote {}", summary(&result.rows), result.csv_path.display()).map_err(stdout_err)
        }
        Command::Replay { manifest, config, overrides, events } => {
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            let outcome = replay(&manifest, &cfg)?;
            if let Some(path) = events {
                let mut f = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                write_event_log(&mut f, &outcome.events, &drive_outcome(&outcome))
                    .map_err(|e| CliError::io(&path, e))?;
            }
            writeln!(out, "{}", outcome_json(&drive_outcome(&outcome))).map_err(stdout_err)?;
            match outcome.abort {
                Some(e) => Err(CliError::ReplayAbort(e)),
                None => Ok(()),
            }
        }
        Command::Match { reference, current, rows, out: csv, config, overrides } => {
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            let mask = rows.as_deref().map(parse_rows).transpose()?;
            let (report, rows) = match_images(&reference, &current, mask, &cfg)?;
            write_matches(&csv, &rows)?;
            writeln!(
                out,
                "score {} ({} reference, {} current keypoints)",
                report.score.value(),
                report.reference.len(),
                report.current.len()
            )
            .map_err(stdout_err)
        }
        Command::Report { csv, out: json_path } => {
            let stats = report(&csv)?;
            let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
            match json_path {
                Some(p) => {
                    std::fs::write(&p, json + "\n").map_err(|e| CliError::io(&p, e))?;
                    let cm = |s: &Option<crate::report::ErrorStats>| {
                        s.as_ref().map_or("n/a".into(), |s| format!("{:.1} cm", 100.0 * s.median_abs_error))
                    };
                    writeln!(
                        out,
                        "{} trials: stage 1 median |error| {}, stage 2 median |error| {}",
                        stats.overall.trials,
                        cm(&stats.overall.stage1),
                        cm(&stats.overall.stage2)
                    )
                    .map_err(stdout_err)
                }
                None => writeln!(out, "{json}").map_err(stdout_err),
            }
        }
        Command::Keys => {
            write!(out, "{}", RunConfig::default().to_text()).map_err(stdout_err)
        }
    }
}
