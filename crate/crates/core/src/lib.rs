//! Learnable time-domain filterbanks.
//!
//! A mel-filterbank (MFSC) reference extractor, a Gabor-wavelet
//! approximation of it built from plain convolutions, the trainable
//! front-end that stacks those convolutions, exact reverse-mode gradients,
//! a desk-scale training harness and filter analysis.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, WAV input and
//! the command line live in the companion `tdfb` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod compare;
pub mod conv;
pub mod error;
pub mod features;
pub mod fft;
pub mod frontend;
pub mod gabor;
pub mod grad;
pub mod mel;
pub mod signal;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use features::FeatureMap;
pub use frontend::{LearningMode, TdFilterbank, Trainable};
pub use gabor::{ComplexFilter, GaborParams};
pub use grad::Gradients;
pub use mel::MelSpec;
pub use signal::{Waveform, Window, WindowKind};

/// Sample rate every waveform in this crate is expected to carry.
pub const SAMPLE_RATE: u32 = 16_000;
/// Width of the wavelet and low-pass filters, in taps (25 ms at 16 kHz).
pub const FILTER_WIDTH: usize = 400;
/// Decimation between output frames, in samples (10 ms at 16 kHz).
pub const HOP: usize = 160;
/// FFT length used by the mel reference and the filter analysis.
pub const N_FFT: usize = 512;
/// Number of mel bands / complex filters.
pub const N_FILTERS: usize = 40;
