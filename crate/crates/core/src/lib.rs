//! Purification of a single qubit under continuous weak measurement.
//!
//! The crate simulates the Bloch-vector stochastic equations for one
//! detector and for three simultaneous detectors, implements the feedback
//! protocols that speed up purification, and provides the deterministic
//! tools used to analyse them: the exact finite-time Bayesian update, a
//! Fokker–Planck solver for the purity, and a log-space quadrature for mean
//! first-passage times.
//!
//! Time is measured in units of `1/Γ₀`, with Γ₀ the measurement rate.

pub mod bayes;
pub mod detector;
pub mod error;
pub mod fpe;
pub mod mtfp;
pub mod noise;
pub mod protocols;
pub mod quad;
pub mod sde;
pub mod state;
pub mod stats;
pub mod trajectory;

pub use detector::{Axis, DetectorParams};
pub use error::{Error, Result};
pub use protocols::{ProtocolKind, ProtocolSpec};
pub use state::{BlochVector, PurityState, Rotation};

/// Version string recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
