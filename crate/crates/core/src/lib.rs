//! Discrete flow matching for categorical graphs.
//!
//! Graphs are joint categorical variables: one state per node and one state
//! per unordered node pair (state 0 of an edge means "no edge"). Noising
//! interpolates each dimension linearly between its clean one-hot and a
//! factorized prior; denoising simulates a continuous-time Markov chain whose
//! rates are built from a posterior predictor.
//!
//! ## Layout
//!
//! - [`graph`]: graph data model, permutations, isomorphism, dataset files
//! - [`initial`]: the four factorized priors
//! - [`distortion`]: time distortion functions, their densities and step schedules
//! - [`ctmc`]: conditional rate matrices, Kolmogorov residuals and the Euler kernel
//! - [`denoiser`]: RRWP features, the exact Bayes oracle and the trainable predictor
//! - [`training`]: cross-entropy objective, training loop and loss-vs-time tracker
//! - [`sampling`]: the generation loop and classifier-free guidance
//! - [`eval`]: validity, V.U.N., MMD statistics and the exact generated-distribution enumerator
//! - [`datasets`]: synthetic dataset generators
//! - [`config`]: flat key/value configuration files
//! - [`verify`]: rate-matrix and discretization checks behind the `verify` command

pub mod config;
pub mod ctmc;
pub mod datasets;
pub mod denoiser;
pub mod distortion;
pub mod error;
pub mod eval;
pub mod graph;
pub mod initial;
pub mod rng;
pub mod sampling;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{CategoricalGraph, GraphDataset, Permutation};
