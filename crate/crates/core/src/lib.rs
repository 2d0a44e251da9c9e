//! Simulation and dimension analysis of two-dimensional signed multiplicative
//! cascade processes `F = (F₁, F₂)` on `[0, 1]`.
//!
//! * [`words`]: the b-adic coding space.
//! * [`weights`]: laws of the weight vector, `Φ`, and the standing assumptions.
//! * [`cascade`]: seeded depth-`n` realizations and tilted path sampling.
//! * [`predict`]: closed-form dimension predictions.
//! * [`estimate`]: box-counting, partition-function, Hölder and level-set estimators.
//! * [`cli`]: the batch front end behind the `cascade-lab` binary.

pub mod cascade;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod predict;
pub mod rng;
pub mod weights;
pub mod words;

pub use error::{Error, Result};
