//! Per-year reconstruction graphs over ocean cells.

pub mod build;
pub mod export;
pub mod subgraph;
pub mod types;

pub use build::{
    build_snapshot, cell_completeness, completeness, edge_features, information_hubs, proximity_neighbors,
    GraphGrids,
};
pub use subgraph::{full_subgraph, receptive_subgraph, Subgraph};
pub use types::{Edge, EdgeKind, GraphConfig, GraphSnapshot, NodeKey, EDGE_FEATURES};
