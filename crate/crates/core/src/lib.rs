//! Numerical core for the analysis of adaptive-rate NOMA uplinks in Poisson
//! cellular networks.
//!
//! A mobile user drawn from the Johnson-Mehl cell of its base station and an
//! IoT device drawn from the Poisson-Voronoi cell share one spectral resource.
//! The base station decodes the (rate-adaptive) mobile signal first, cancels
//! it, then decodes the fixed-rate IoT packet. This crate evaluates the
//! moments of the conditional-success (meta) distribution of both links, the
//! ergodic rate of the mobile user and the mean local delay of the IoT device,
//! and it does so along two independent routes:
//!
//! - [`analytic`]: nested quadrature of the moment expressions built on the
//!   approximate inter-cell interferer processes of [`distributions`];
//! - [`spatial`] + [`montecarlo`]: full-geometry simulation of the network
//!   under the typical-cell viewpoint.
//!
//! [`optimizer`] solves the rate-maximisation problems under a mean-local-delay
//! cap for both NOMA and the orthogonal (time-shared) baseline.
//!
//! The crate is `no_std` (it needs `alloc`). Parallelism is injected through
//! [`exec::Executor`]; IO, file formats and the command line live in the
//! `arnoma` companion crate.
#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod config;
pub mod distributions;
mod error;
pub mod exec;
pub mod montecarlo;
pub mod optimizer;
pub mod quadrature;
pub mod rng;
pub mod spatial;
pub mod stats;

pub use error::{Error, ParamViolation};

/// Link role inside a NOMA pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Device {
    /// Rate-adaptive mobile user, paired from the Johnson-Mehl cell.
    Mobile,
    /// Fixed-rate IoT device, paired from the Poisson-Voronoi cell.
    Iot,
}

/// Multiple-access scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Both devices share the resource; SIC removes the mobile signal.
    Noma,
    /// Mobile users get a fraction `eta` of the time, IoT devices the rest.
    Oma,
}

impl Device {
    /// Lower-case name used in CSV files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Device::Mobile => "mobile",
            Device::Iot => "iot",
        }
    }
}

impl Scheme {
    /// Lower-case name used in CSV files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::Oma => "oma",
        }
    }
}
