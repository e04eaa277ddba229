//! Thresholded discrete optimal transport for measuring unobserved reallocation
//! between two price distributions, and a market-equilibrium model that turns
//! an estimated trade volume into implied transaction prices and costs.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command line
//! and thread pools live in the `diftrans` companion crate.
//!
//! Module map:
//!
//! - [`pmf`]: sales records, period filters and empirical price distributions.
//! - [`transport`]: exact `OT_d` solver, transport plans, set-duality certificates.
//! - [`estimators`]: before-and-after, placebo bandwidth selection,
//!   difference-in-transports and the composition correction.
//! - [`equilibrium`]: demand/supply under transaction costs and their inversion.
//! - [`inference`]: m-out-of-n subsampling confidence intervals.
//! - [`baseline`]: the 2×2 difference-in-differences regression on log prices.
//! - [`synth`]: a lottery/black-market simulator with a planted trade share.
#![no_std]
#![deny(missing_docs)]

extern crate alloc;

mod error;
mod flow;
mod rng;

pub mod baseline;
pub mod equilibrium;
pub mod estimators;
pub mod exec;
pub mod inference;
pub mod pmf;
pub mod stats;
pub mod synth;
pub mod transport;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use pmf::{PeriodFilter, PeriodRange, PriceCounts, PricePmf, SalesRecord, YearMonth};
pub use transport::{Bandwidth, TransportPlan};
