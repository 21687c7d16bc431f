//! Benchmark applications.

pub mod feed;
pub mod localisation;
