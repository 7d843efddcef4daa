//! Achievable rates of linear feedback coding schemes over stationary AR(p)
//! Gaussian channels, together with an executable Monte Carlo implementation
//! of the schemes that validates the closed-form predictions.
//!
//! The crate is organized around four pieces:
//!
//! - [`noise`]: the AR(p) noise process — spectral polynomial, PSD,
//!   stationary sampling and the whitening filter.
//! - [`estimation`]: Gaussian MMSE machinery — the structured-inverse
//!   quadratic forms, the whitened-channel message gains, finite-horizon
//!   MMSE closed forms and the rank-2 Gram recursion used by the simulator.
//! - [`rate`]: the constrained rate maximizations for the first- and
//!   second-order message recursions, the AR(1) closed-form capacity
//!   cross-check, and the repeated-root limit identity.
//! - [`sim`]: the Monte Carlo coding simulator (exact recursive MMSE
//!   encoding, whitened-output estimation) with per-step statistics.
//!
//! Grid evaluations and Monte Carlo trials are data-parallel via rayon when
//! the `parallel` feature (default) is enabled; results are bit-identical
//! regardless of worker count.

pub mod error;
pub mod estimation;
pub mod noise;
pub mod par;
pub mod params;
pub mod rate;
pub mod rng;
pub mod sim;
pub mod verify;

pub use error::FeedcapError;
pub use noise::{ArModel, NoisePath};
pub use params::{RootKind, Sk2Params};
pub use rate::{RateResult, Scheme, SearchOpts};
pub use sim::{SchemeParams, SimConfig, SimReport};
