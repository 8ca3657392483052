//! Single line-of-sight simulator and detection library for encrypted-signal
//! GNSS authentication.
//!
//! The library synthesizes a complex baseband snapshot channel for an
//! encrypted E6-C style spreading code, applies receiver error models
//! (two-state clock, differential ionosphere, statistical multipath, AWGN),
//! optionally injects inauthentic replica signals, and runs the user-side
//! detection chain: E1-to-E6 handover, maximum / early signal detection,
//! s-curve range estimation, vestigial signal search, and the layered
//! authentication checks.

pub mod batchfile;
pub mod campaign;
pub mod channel;
pub mod correlator;
pub mod detector;
pub mod error;
pub mod mitigation;
pub mod rng;
pub mod scenario;
pub mod signal;
pub mod spoofer;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
