//! Harness around `slicebench-core`: corpus file IO, model clients, the
//! end-to-end pipeline, and report emission. The `slicebench` binary in
//! this crate exposes all of it as subcommands.

pub mod config;
pub mod dataset;
pub mod llm;
pub mod pipeline;
pub mod prompt;
pub mod report;
