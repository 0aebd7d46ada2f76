//! Forced alignment of noisy transcripts against ASR segments.
//!
//! The pipeline: clean the provided transcript ([`transcript`]), load ASR
//! segments ([`hypothesis`]), find each segment's best-matching transcript
//! window and classify it ([`aligncore`]), then cut audio and write manifests
//! ([`dataset`]). Borderline segments go through human review ([`review`]).
//!
//! The core is generic over the threshold scalar; the aliases below fix it
//! to `f64`, with [`ExactThresholds`] for exact rational comparisons.

pub mod aligncore;
pub mod dataset;
pub mod evalsynth;
pub mod hypothesis;
pub mod num;
pub mod review;
pub mod transcript;

pub use num::{Rational, Scalar};

pub type Thresholds = aligncore::Thresholds<f64>;
pub type ExactThresholds = aligncore::Thresholds<Rational>;
pub type ErrorRate = evalsynth::ErrorRate<f64>;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
