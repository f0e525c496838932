//! Desk-scale laboratory for sparse spanning-subgraph embedding.

pub mod adversary;
pub mod backbone;
pub mod bandwidth;
pub mod colouring;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod partition;
pub mod regularity;
pub mod rng;

pub use bandwidth::Labelling;
pub use colouring::Colouring;
pub use error::{Error, Result};
pub use graph::{GnpParams, Graph, GraphBuilder, VertexSet};
