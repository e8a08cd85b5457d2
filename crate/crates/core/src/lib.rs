//! Restricted Boltzmann Machines trained on Bars-and-Stripes with three
//! interchangeable negative-statistics estimators: alternating Gibbs sampling,
//! an emulated forward quantum anneal, and an emulated reverse anneal seeded
//! from the training data.
//!
//! The crate is organised bottom-up:
//!
//! - [`rbm`]: parameters, energies, conditionals, Gibbs chains and exact
//!   enumeration oracles.
//! - [`bas`]: the Bars-and-Stripes dataset.
//! - [`ising`]: lowering an RBM to a logical Ising problem.
//! - [`chimera`]: a Chimera-style hardware graph, chain embeddings and
//!   chain-break resolution.
//! - [`annealer`]: the annealer emulator (forward and reverse schedules).
//! - [`trainer`]: the training loop.
//! - [`metrics`]: log-likelihood, reconstruction, dataset probability mass and
//!   energy histograms.

pub mod annealer;
pub mod bas;
pub mod chimera;
pub mod error;
pub mod ising;
pub mod metrics;
pub mod parallel;
pub mod rbm;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
