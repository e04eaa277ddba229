//! File formats, run manifests, a thread-pool executor and the `diftrans`
//! command line on top of `diftrans-core`.

pub mod args;
pub mod cli;
pub mod io;
pub mod manifest;
pub mod parallel;
