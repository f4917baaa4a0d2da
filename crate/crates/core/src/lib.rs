//! Samplers, exact oracles and statistical verifiers for unimodular random
//! rooted networks.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`network`], [`canon`], [`metric`] and [`orbits`] hold the data model:
//!   finite marked multigraphs, rooted truncations, canonical keys of
//!   rooted-isomorphism classes, the local metric and automorphism orbits.
//! * [`gen`] builds probability measures on rooted networks (uniform
//!   rooting, Galton-Watson families, the canopy tree, configuration models,
//!   products, covers, edge replacement, PWIT).
//! * [`mtp`] checks the mass-transport principle exactly on finite networks
//!   and statistically on samplers, and computes ball statistics and the
//!   isoperimetric identity.
//! * [`walk`], [`forest`] and [`perc`] run random walks, heat kernels,
//!   spanning forests and percolation on top of the samplers.
//!
//! All randomness flows through [`rng::stream`], so every draw is a pure
//! function of `(seed, index)`.

pub mod canon;
pub mod error;
pub mod explore;
pub mod forest;
pub mod gen;
pub mod mark;
pub mod metric;
pub mod mtp;
pub mod network;
pub mod orbits;
pub mod perc;
pub mod rng;
pub mod stats;
pub mod walk;

pub use canon::{canonical_form, CanonicalForm, CanonicalKey};
pub use error::{Error, Result};
pub use mark::Mark;
pub use network::{Edge, Network, Radius, RootedNetwork};

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
