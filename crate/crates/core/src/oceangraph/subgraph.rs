//! Receptive-field subgraphs for minibatches.

use std::collections::BTreeMap;

use super::types::{Edge, GraphSnapshot};

/// Nodes that can influence `targets` through `hops` rounds of message passing.
///
/// `nodes` is sorted by snapshot index and `depth` holds each node's hop distance to the
/// nearest target. Only edges into nodes closer than `hops` are kept; the outermost ring
/// contributes features but needs no aggregation of its own.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    pub nodes: Vec<usize>,
    pub depth: Vec<usize>,
    pub edges: Vec<Edge>,
    pub targets: Vec<usize>,
}

pub fn receptive_subgraph(snapshot: &GraphSnapshot, targets: &[usize], hops: usize) -> Subgraph {
    let mut depth_of: BTreeMap<usize, usize> = targets.iter().map(|&t| (t, 0)).collect();
    let mut frontier: Vec<usize> = depth_of.keys().copied().collect();
    for h in 1..=hops {
        let mut next = Vec::new();
        for &n in &frontier {
            for e in snapshot.in_edges(n) {
                if let std::collections::btree_map::Entry::Vacant(v) = depth_of.entry(e.src) {
                    v.insert(h);
                    next.push(e.src);
                }
            }
        }
        frontier = next;
    }
    let nodes: Vec<usize> = depth_of.keys().copied().collect();
    let depth: Vec<usize> = depth_of.values().copied().collect();
    let local = |g: usize| nodes.binary_search(&g).expect("source lies inside the receptive field");
    let mut edges = Vec::new();
    for (dst_local, &n) in nodes.iter().enumerate() {
        if depth[dst_local] >= hops {
            continue;
        }
        for e in snapshot.in_edges(n) {
            edges.push(Edge {
                src: local(e.src),
                dst: dst_local,
                ..*e
            });
        }
    }
    let targets = targets.iter().map(|&t| local(t)).collect();
    Subgraph {
        nodes,
        depth,
        edges,
        targets,
    }
}

/// The whole snapshot as one subgraph with every node a target.
pub fn full_subgraph(snapshot: &GraphSnapshot) -> Subgraph {
    let nodes: Vec<usize> = (0..snapshot.node_count()).collect();
    Subgraph {
        depth: vec![0; nodes.len()],
        targets: nodes.clone(),
        nodes,
        edges: snapshot.edges.clone(),
    }
}
