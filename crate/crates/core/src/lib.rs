//! Reversible Markov chains as electrical networks.
//!
//! The crate computes equilibrium potentials, capacities, Green functions and
//! hitting times of finite reversible chains, certifies them through the
//! Dirichlet and Thomson variational principles, bounds spectral gaps, runs
//! recurrence experiments on lattice boxes, analyses the metastable landscape
//! of Glauber dynamics on small tori, and cross-checks all of it by Monte Carlo.
//!
//! ```
//! use ohmic::{generate, potential, NodeSet};
//!
//! let net = generate::p4();
//! let c = potential::capacity(&net, &NodeSet::singleton(0), &NodeSet::singleton(3)).unwrap();
//! assert!((c - 1.0 / 3.0).abs() < 1e-14);
//! ```

pub mod error;
pub mod flow;
pub mod generate;
pub mod glauber;
pub mod lattice;
pub mod mc;
pub mod network;
pub mod par;
pub mod potential;
pub mod solver;
pub mod spectral;

pub use error::{Error, ErrorClass, Result};
pub use flow::Flow;
pub use network::{build_network, Measure, Network, NetworkBuilder, NodeSet, TransitionKernel};
pub use potential::{EquilibriumSolution, GreenMatrix, Potential};
