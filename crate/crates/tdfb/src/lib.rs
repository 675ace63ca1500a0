//! Standard-library side of the TD-filterbank toolkit: WAV input, feature
//! and checkpoint files, analysis exports, a rayon batch executor and the
//! `tdfb` command line.

pub mod cli;
pub mod error;
pub mod exec;
pub mod formats;
pub mod wav;

pub use error::{Error, Result};
pub use tdfb_core as core;
