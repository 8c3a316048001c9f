//! Controlled development of Bayer sensor data into tiled JPEG corpora for
//! steganalysis, with a baseline JPEG codec, quantisation-table forensics
//! and reproducible dataset splitting.

pub mod dataset;
pub mod develop;
pub mod jpeg;
pub mod paramsample;
pub mod rawio;
pub mod rng;
