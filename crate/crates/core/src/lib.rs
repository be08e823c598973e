//! Finite-resolution polarization measurements on single photons and photon
//! pairs, the signed joint quasi-probabilities they reveal, and the
//! distribution of the Bell correlation `K` built from them.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod polarization;
pub mod quasiprob;

pub use error::{Error, Result};
