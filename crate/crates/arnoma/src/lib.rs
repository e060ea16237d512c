//! Command-line front end and file formats for `arnoma-core`.
//!
//! The binary wraps the numerical core with a parameter-file parser, CSV
//! writers, a run manifest, an on-disk cache of inverse JM-cell areas and a
//! rayon-backed executor.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod configfile;
pub mod exec;
pub mod manifest;
pub mod output;
pub mod reproduce;
