//! Batch front end: configuration, a fixed-size worker pool, resumable
//! development runs and the per-file utility verbs.

pub mod commands;
pub mod config;
pub mod report;
