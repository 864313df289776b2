//! Link-level Monte Carlo simulator for a two-cell downlink where an aerial
//! RIS assists a coordinated NOMA cluster: one near user per cell and a far
//! cell-edge user served by both base stations through non-coherent joint
//! transmission.
//!
//! The modules build on each other bottom-up:
//!
//! - [`channel`]: path loss and Rayleigh/Rician fading for every link
//! - [`ris`]: optimal and quantized element phases, element-to-BS split
//! - [`noma`]: combined channels, SIC SINRs and rates
//! - [`metrics`]: unit conversion, noise power, SE and EE
//! - [`montecarlo`]: seeded trial ensembles, rate/outage/SE/EE sweeps
//! - [`optimizer`]: power-allocation and element-split searches
//! - [`feedback`]: quantized-phase datasets and the feedback channel model
//! - [`config`]: the experiment configuration document

pub mod channel;
pub mod config;
pub mod error;
pub mod feedback;
pub mod metrics;
pub mod noma;
pub mod montecarlo;
pub mod optimizer;
pub mod ris;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
