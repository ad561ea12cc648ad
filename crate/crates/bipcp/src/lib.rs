//! Two-rate contact process on the bipartite random connection hypergraph.
//!
//! * [`phase`]: strategy exponents, the phase classification and scale algebra.
//! * [`hypergraph`]: sampling and querying the spatial bipartite graph.
//! * [`contact`]: exact continuous-time simulation.
//! * [`combinatorics`]: paths, discovery trees and tree weights.
//! * [`harness`]: sweeps, fits, phase-diagram output and the verification suite.

pub mod combinatorics;
pub mod contact;
pub mod error;
pub mod harness;
pub mod hypergraph;
pub mod phase;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/phase.md")]
    pub mod phase {}
    #[doc = include_str!("../../../book/src/hypergraph.md")]
    pub mod hypergraph {}
    #[doc = include_str!("../../../book/src/contact.md")]
    pub mod contact {}
    #[doc = include_str!("../../../book/src/combinatorics.md")]
    pub mod combinatorics {}
    #[doc = include_str!("../../../book/src/harness.md")]
    pub mod harness {}
}
