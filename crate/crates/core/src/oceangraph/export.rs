//! Edge-list CSV and binary adjacency export.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{GraphSnapshot, EDGE_FEATURES};
use crate::error::Result;

pub fn write_edges_csv(path: &Path, snapshot: &GraphSnapshot) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "src_i", "src_j", "src_d", "dst_i", "dst_j", "dst_d", "kind", "f1", "f2", "f3", "f4", "f5",
    ])?;
    for e in &snapshot.edges {
        let (s, d) = (snapshot.nodes[e.src], snapshot.nodes[e.dst]);
        let mut row = vec![
            s.i.to_string(),
            s.j.to_string(),
            s.d.to_string(),
            d.i.to_string(),
            d.j.to_string(),
            d.d.to_string(),
            e.kind.name().to_string(),
        ];
        row.extend(e.features.iter().map(|f| f.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjacencySidecar {
    pub dims: [usize; 4],
    pub t: usize,
    pub n_edges: usize,
    pub features: usize,
    /// `(i, j, d)` of each node in snapshot order.
    pub nodes: Vec<[usize; 3]>,
    pub record: String,
}

/// Per-edge record: `u32 src, u32 dst, u8 kind, f32 x 5`, little endian.
pub fn encode_adjacency(snapshot: &GraphSnapshot) -> Vec<u8> {
    let mut out = Vec::with_capacity(snapshot.edges.len() * (9 + 4 * EDGE_FEATURES));
    for e in &snapshot.edges {
        out.extend_from_slice(&(e.src as u32).to_le_bytes());
        out.extend_from_slice(&(e.dst as u32).to_le_bytes());
        out.push(e.kind as u8);
        for f in e.features {
            out.extend_from_slice(&(f as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_adjacency(stem: &Path, snapshot: &GraphSnapshot) -> Result<()> {
    let sidecar = AdjacencySidecar {
        dims: snapshot.dims.as_array(),
        t: snapshot.t,
        n_edges: snapshot.edges.len(),
        features: EDGE_FEATURES,
        nodes: snapshot.nodes.iter().map(|k| [k.i, k.j, k.d]).collect(),
        record: "u32 src, u32 dst, u8 kind, f32 x 5".into(),
    };
    fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&sidecar)?)?;
    fs::write(stem.with_extension("bin"), encode_adjacency(snapshot))?;
    Ok(())
}
