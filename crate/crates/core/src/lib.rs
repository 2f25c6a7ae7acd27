//! Backdoor-style watermarking for variational quantum circuits.
//!
//! A circuit is trained so that its base task (a molecular ground or excited
//! state, or a MaxCut instance) reaches near-optimal loss while a secret
//! probe, a prepared input paired with a random observable, returns a chosen
//! value. The owner proves authorship by evaluating the probe.
//!
//! Qubit 0 is the most significant bit of an amplitude index throughout.

pub mod benchmarks;
pub mod circuit;
pub mod error;
pub mod hamiltonian;
pub mod noise;
pub mod sim;
pub mod train;
pub mod transpile;
pub mod watermark;

pub use error::{Error, Result};
