//! Hypergraph and graph constructions, and the clique-expansion bridge.

mod build;
mod hypergraph;
pub mod io;
mod weighted;

pub use build::{
    build_cayley_graph, build_grid_hypergraph, build_projective_plane, build_random_regular_graph, build_random_regular_hypergraph, clique_expansion,
    symmetric_generating_set, union_layers, voltage_covering, CONFIG_MODEL_RESTARTS,
};
pub use hypergraph::{Boundary, GridModel, GridSpec, Hypergraph, LiftConvention, VoltageAssignment};
pub use weighted::WeightedGraph;
