//! File formats, scorer backends and the `genbias` command line on top of
//! [`genbias_core`].
//!
//! - [`io`]: lexicon, corpus and NDJSON files
//! - [`fixture`]: JSON table fixtures for the table backend
//! - [`remote`]: HTTP client for a scorer service
//! - [`config`], [`pipeline`], [`report`], [`cli`]: runs and their reports

pub mod cli;
pub mod config;
pub mod error;
pub mod fixture;
pub mod io;
pub mod pipeline;
pub mod prefetch;
pub mod remote;
pub mod report;

pub use error::{Error, Result};
