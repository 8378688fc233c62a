//! Kinetic-matrix spectra and FitzHugh-Nagumo ring dynamics.
//!
//! `spectral` covers first-order kinetics `P' = KP`; `network`, `integrate`,
//! `detect`, `waves` and `sweep` cover synchronization and rotating waves on
//! directed chains and rings.

pub mod cli;
pub mod detect;
pub mod error;
pub mod integrate;
pub mod interp;
pub mod linalg;
pub mod network;
pub mod seed;
pub mod spectral;
pub mod sweep;
pub mod waves;

pub use error::{Error, Result};
