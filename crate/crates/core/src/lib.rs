//! Homogeneous sets and distinct degrees in induced subgraphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: bitset graphs, vertex sets, diversity, `G(n, p)`.
//! * [`oracles`]: exact `hom(G)` and `f(G)` on small graphs, Turán greedy,
//!   degree regularization, a greedy lower bound for `f`.
//! * [`distributions`]: probability-vector distributions (trivial,
//!   uniformly constant, blended, products) and the `G(p)` model.
//! * [`bad`]: Monte Carlo estimation of the small-ball quantity `bad`.
//! * [`clusters`]: cluster neighbourhoods, moments and diverse-set extraction.
//! * [`partition`]: the randomized cluster-partition construction.
//! * [`extract`]: pressure pipeline, merging, witness realization and the
//!   recursive synthesizer.
//! * [`experiments`]: tail bounds, scaling fits and CSV/JSON reporting.

pub mod bad;
pub mod clusters;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod extract;
pub mod graph;
pub mod oracles;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Graph, VertexSet};
