//! Synthetic RGB-D crop field and the seeded trial protocol.

mod render;
mod texture;
mod trial;
mod world;

pub use render::{render_frame, render_labeled, RenderedFrame, Surface};
pub use trial::{
    run_trial, run_trial_observed, validate_trial, DriveOutcome, DriverStatus, FrameDriver, TraceEntry,
    TrialFrame, TrialResult,
};
pub use world::{CameraPose, HeadlandTexture, WorldConfig};
