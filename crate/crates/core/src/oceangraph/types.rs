use serde::{Deserialize, Serialize};

use crate::datagrid::Dims;
use crate::error::{OxyError, Result};

/// Cell address on the lattice; ordering is lexicographic in (i, j, d, t).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub i: usize,
    pub j: usize,
    pub d: usize,
    pub t: usize,
}

impl NodeKey {
    pub fn new(i: usize, j: usize, d: usize, t: usize) -> Self {
        Self { i, j, d, t }
    }

    pub fn flat(&self, dims: Dims) -> usize {
        dims.index(self.i, self.j, self.d, self.t)
    }
}

/// Neighbourhood parameters. Radii count cells, so on a 1° lattice `delta` is in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub delta: usize,
    pub depth_radius: usize,
    pub completeness_threshold: f64,
    pub hub_radius_factor: f64,
    pub max_hubs: usize,
    pub half_window: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            delta: 1,
            depth_radius: 1,
            completeness_threshold: 0.25,
            hub_radius_factor: 3.0,
            max_hubs: 8,
            half_window: 2,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 || self.depth_radius == 0 || self.half_window == 0 {
            return Err(OxyError::Config("graph radii and half window must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.completeness_threshold) {
            return Err(OxyError::Config("completeness threshold must lie in [0, 1]".into()));
        }
        if !(self.hub_radius_factor >= 1.0) {
            return Err(OxyError::Config("hub radius factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hub_radii(&self) -> (usize, usize) {
        (
            (self.hub_radius_factor * self.delta as f64).floor() as usize,
            (self.hub_radius_factor * self.depth_radius as f64).floor() as usize,
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    SelfLoop = 0,
    Proximity = 1,
    Hub = 2,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::SelfLoop => "self_loop",
            EdgeKind::Proximity => "proximity",
            EdgeKind::Hub => "hub",
        }
    }
}

pub const EDGE_FEATURES: usize = 5;

/// Directed edge `src -> dst`; indices refer to `GraphSnapshot::nodes`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub kind: EdgeKind,
    pub features: [f64; EDGE_FEATURES],
}

/// One year's reconstruction graph. Edges are grouped by destination in node order.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSnapshot {
    pub t: usize,
    pub dims: Dims,
    pub nodes: Vec<NodeKey>,
    pub edges: Vec<Edge>,
    /// Start of each node's incoming edge run, plus a final end marker.
    pub offsets: Vec<usize>,
}

impl GraphSnapshot {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn in_edges(&self, node: usize) -> &[Edge] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Snapshot index of `key`, found by binary search over the sorted node list.
    pub fn position(&self, key: &NodeKey) -> Option<usize> {
        self.nodes.binary_search(key).ok()
    }
}
