//! Cross-interval track alignment for zero-shot video segmentation, plus the
//! downstream morphometrics (centerline length) and kinematics (tailbeat
//! frequency) computed from the confirmed per-frame masks.
//!
//! The crate is model-agnostic: candidate masks and propagated tracks arrive
//! as NDJSON produced by any external segmenter, and [`synth`] provides a
//! procedural undulating-swimmer oracle so that every stage can be verified
//! without model weights.
//!
//! Module map:
//!
//! - [`mask`]: run-length-encoded binary masks and exact pixel geometry.
//! - [`alignment`]: interval sampling, score gating, cross-track IOU
//!   alignment and consolidation into individuals.
//! - [`morphometry`]: Zhang-Suen thinning, geodesic centerline length and
//!   the pixel-to-meter camera conversion.
//! - [`kinematics`]: head/tail geometry, tail displacement, Savitzky-Golay
//!   smoothing, crossing detection and windowed tailbeat frequency.
//! - [`synth`]: ground-truth scene generator and synthetic track propagator.
//! - [`eval`]: Dice, precision/recall at IOU thresholds, time-blocked splits.
//! - [`io`]: NDJSON and CSV record formats shared by the command line tool.
//! - [`cli`]: the `flair` command line surface.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod kinematics;
pub mod mask;
pub mod morphometry;
pub mod synth;

pub use error::{Error, Result};
pub use mask::{BinaryMask, BoundingBox, PixelPoint, RealPoint};
