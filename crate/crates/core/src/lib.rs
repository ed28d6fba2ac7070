//! Vision-only crop-row exit for field robots.
//!
//! The robot leaves the current crop row in two visually servoed stages. A
//! reference frame is cropped and described with SIFT features; every new frame
//! is cropped with the same mask and matched against it with a 2-NN ratio test.
//! The robot halts once the surviving match count drops below a threshold.
//! Stage 1 runs from the end-of-row trigger to the row end, stage 2 from the row
//! end one robot length into the headland, with the stage-2 mask derived from
//! the headland depth image.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and the
//! command line live in the `rowexit` crate.
//!
//! - [`image`]: pixel containers, luminance conversion, row cropping
//! - [`features`]: scale space, keypoints and 128-d descriptors
//! - [`matching`]: brute-force 2-NN, ratio filter, similarity score
//! - [`headland`]: row-median depths, field-of-view span, stage-2 mask
//! - [`pipeline`]: the exit state machine and the odometry baseline
//! - [`sim`]: synthetic RGB-D field and trial runner
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod features;
pub mod headland;
pub mod image;
pub mod matching;
pub mod pipeline;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
