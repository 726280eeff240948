//! Kernels-per-row counting for maize ears.
//!
//! The pipeline takes per-kernel segmentation masks of one ear and reports
//! how many mature kernels lie along a row:
//!
//! 1. [`extract`] cuts individual ears out of a scene photographed on a dark
//!    backdrop.
//! 2. [`contract`] loads the mask files produced by the segmentation
//!    backend and rejects inconsistent masks.
//! 3. [`filter`] keeps single-kernel masks (area window, confidence
//!    threshold, overlap removal) and reduces each to a center point.
//! 4. [`graph`] and [`row`] link each kernel to its angularly distinct
//!    nearest neighbors and trace the shortest row from the second
//!    bottom-most to the second top-most kernel, discounting immature kernels
//!    at the tip.
//! 5. [`multipath`] repeats the trace on each side of that row and averages
//!    the three counts.
//!
//! [`synth`] renders synthetic ears with known counts for testing, [`eval`]
//! scores predictions against ground truth, and [`batch`] runs whole
//! directories in parallel.

pub mod batch;
pub mod config;
pub mod contract;
pub mod error;
pub mod eval;
pub mod extract;
pub mod filter;
pub mod graph;
pub mod model;
pub mod multipath;
pub mod rle;
pub mod row;
pub mod synth;

pub use error::{Error, Result};
pub use model::{BBox, BinaryMask, EarRecord, GroundTruthAnnotation, Kernel, MaskCandidate, Point, RgbImage};
