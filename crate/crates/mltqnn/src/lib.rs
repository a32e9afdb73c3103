//! Dataset and checkpoint formats, run configuration, a rayon executor and
//! the `mltqnn` command line, built on `mltqnn-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataio;
pub mod exec;

pub use exec::Parallel;
