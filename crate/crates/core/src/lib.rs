//! Distributed stochastic generalized Nash equilibrium seeking.
//!
//! Agents minimize expected-value costs coupled through shared affine
//! constraints while exchanging information only with graph neighbors. The
//! crate provides the game model with sample-average gradient oracles,
//! the extended preconditioned forward-backward machinery for node-based and
//! edge-based dual consensus (network and aggregative variants), per-agent
//! message-passing solvers, a centralized full-information oracle, and
//! seeded scenario generators.
//!
//! All numerics are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! type aliases below fix the default `f64` instantiation.

pub mod error;
pub mod graph;
pub mod game;
pub mod ops;
pub mod oracle;
pub mod rng;
pub mod scenarios;
pub mod solvers;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::Graph;
pub use scalar::Scalar;

/// Default-precision aliases.
pub type GraphF64 = graph::Graph<f64>;
