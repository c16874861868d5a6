//! Cochlea-scaled vowel spectra and the perceptual spaces they induce.
//!
//! The crate chains five stages:
//!
//! - [`signal`]: sample buffers, WAV I/O and stimulus conditioning
//!   (center segment, raised-cosine fades, RMS normalization).
//! - [`synth`]: a source-filter vowel synthesizer and an autocorrelation
//!   f0 estimator used to verify every token.
//! - [`auditory`]: the ERB-spaced linear gammatone filterbank that turns a
//!   token into a 200-channel excitation pattern in dB.
//! - [`geometry`]: spectral distances, classical MDS, Procrustes alignment
//!   and the axis-ratio diagnostic.
//! - [`stats`]: within-cluster distances, piecewise mixed-effects regression,
//!   paired f0 comparisons and Benjamini-Hochberg FDR control.
//!
//! [`pipeline`] wires them together for the command-line tool.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auditory;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod signal;
pub mod stats;
pub mod synth;
pub mod vowel;

pub use error::{Error, ErrorKind, Result};
pub use signal::SampleBuffer;
pub use vowel::Vowel;

/// Target fundamental frequencies of the recording grid, in Hz.
pub const DEFAULT_F0_GRID: [f64; 10] = [
    220.0, 330.0, 440.0, 523.0, 587.0, 698.0, 784.0, 880.0, 988.0, 1046.0,
];

/// Maximum relative deviation between measured and target f0 for a token
/// to be accepted.
pub const F0_TOLERANCE: f64 = 0.05;
