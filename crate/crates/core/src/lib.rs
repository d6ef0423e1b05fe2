//! Perfect matchings in 4-uniform hypergraphs under a minimum vertex degree
//! condition: generators, exact oracles, the 4x4x4 link-graph classification,
//! dense-block extraction, absorbing matchings and the two-track matcher.

pub mod absorb;
pub mod campaign;
pub mod construct;
pub mod error;
pub mod extract;
pub mod format;
pub mod hypergraph;
pub mod link;
pub mod pipeline;
pub mod rng;
pub mod solve;

pub use error::{Error, Result};
pub use hypergraph::{Density, DensityKind, Hypergraph, Matching, MatchingCheck, PartiteSpec};
pub use link::{Classification, LinkGraph, PatternKind, Side, Verdict};
