//! File formats, resumable grid sweeps, reports and the command-line front
//! end for `recdp-core`.

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod meta;
pub mod model_io;
pub mod numfmt;
pub mod pipeline;
pub mod report;
pub mod store;
pub mod synth;
