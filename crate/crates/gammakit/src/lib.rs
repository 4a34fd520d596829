//! Standard-library companion to `gammakit-core`: a threaded FFT backend, the GFLD field
//! container, JSON problem configuration, verification suites, reports and the CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod fft;
pub mod gfld;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use fft::RustFft;
pub use gammakit_core as core;
