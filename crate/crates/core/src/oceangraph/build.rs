//! Proximity neighbours, completeness-gated hubs, edge features, and snapshots.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::types::{Edge, EdgeKind, GraphConfig, GraphSnapshot, NodeKey, EDGE_FEATURES};
use crate::datagrid::derived::density_or_reference;
use crate::datagrid::{great_circle_km, Bathymetry, Dims, Grid4D};
use crate::error::{OxyError, Result};

/// Grids a snapshot reads from. `observed` supplies the lattice and the completeness mask.
#[derive(Copy, Clone, Debug)]
pub struct GraphGrids<'a> {
    pub observed: &'a Grid4D,
    pub bathymetry: &'a Bathymetry,
    pub temperature: Option<&'a Grid4D>,
    pub salinity: Option<&'a Grid4D>,
}

impl<'a> GraphGrids<'a> {
    pub fn new(observed: &'a Grid4D, bathymetry: &'a Bathymetry) -> Self {
        Self {
            observed,
            bathymetry,
            temperature: None,
            salinity: None,
        }
    }

    pub fn with_physics(mut self, temperature: &'a Grid4D, salinity: &'a Grid4D) -> Self {
        self.temperature = Some(temperature);
        self.salinity = Some(salinity);
        self
    }

    fn dims(&self) -> Dims {
        self.observed.dims
    }

    pub fn is_ocean(&self, i: usize, j: usize, d: usize) -> bool {
        self.bathymetry.is_ocean(i, j, self.observed.depth_levels[d])
    }

    pub fn density(&self, key: NodeKey) -> f64 {
        let k = key.flat(self.dims());
        let pick = |g: Option<&Grid4D>| g.and_then(|g| g.mask[k].then(|| g.values[k]));
        density_or_reference(pick(self.temperature), pick(self.salinity))
    }

    pub fn lon_lat(&self, key: NodeKey) -> (f64, f64) {
        let dims = self.dims();
        (dims.lon_center(key.i), dims.lat_center(key.j))
    }
}

/// Fraction of the `2T` window steps around the centre that are observed.
///
/// `window` holds `2T + 1` flags for years `t-T ..= t+T`; the centre entry is ignored.
pub fn completeness(window: &[bool], half_window: usize) -> Result<f64> {
    if half_window == 0 {
        return Err(OxyError::InvalidWindow);
    }
    if window.len() != 2 * half_window + 1 {
        return Err(OxyError::Data(format!(
            "completeness window has {} steps, expected {}",
            window.len(),
            2 * half_window + 1
        )));
    }
    let hits = window
        .iter()
        .enumerate()
        .filter(|&(k, &m)| k != half_window && m)
        .count();
    Ok(hits as f64 / (2 * half_window) as f64)
}

/// Completeness of one cell; years outside the record count as unobserved.
pub fn cell_completeness(mask_grid: &Grid4D, key: NodeKey, half_window: usize) -> Result<f64> {
    if half_window == 0 {
        return Err(OxyError::InvalidWindow);
    }
    let dims = mask_grid.dims;
    let window: Vec<bool> = (0..=2 * half_window)
        .map(|k| {
            let tau = key.t as i64 + k as i64 - half_window as i64;
            (0..dims.time as i64).contains(&tau)
                && mask_grid.mask[dims.index(key.i, key.j, key.d, tau as usize)]
        })
        .collect();
    completeness(&window, half_window)
}

fn wrapped_columns(center: usize, radius: usize, n: usize) -> BTreeSet<usize> {
    let r = radius as i64;
    (-r..=r)
        .map(|o| (center as i64 + o).rem_euclid(n as i64) as usize)
        .collect()
}

fn clamped_range(center: usize, radius: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    center.saturating_sub(radius)..=(center + radius).min(n - 1)
}

fn box_cells(
    grids: &GraphGrids<'_>,
    node: NodeKey,
    horizontal: usize,
    vertical: usize,
) -> BTreeSet<NodeKey> {
    let dims = grids.dims();
    let mut out = BTreeSet::new();
    for i in wrapped_columns(node.i, horizontal, dims.lon) {
        for j in clamped_range(node.j, horizontal, dims.lat) {
            for d in clamped_range(node.d, vertical, dims.depth) {
                let key = NodeKey::new(i, j, d, node.t);
                if key != node && grids.is_ocean(i, j, d) {
                    out.insert(key);
                }
            }
        }
    }
    out
}

/// Ocean cells within the proximity box, longitude wrapping, excluding the node itself.
pub fn proximity_neighbors(node: NodeKey, grids: &GraphGrids<'_>, config: &GraphConfig) -> BTreeSet<NodeKey> {
    box_cells(grids, node, config.delta, config.depth_radius)
}

fn select_hubs(
    node: NodeKey,
    grids: &GraphGrids<'_>,
    config: &GraphConfig,
    proximity: &BTreeSet<NodeKey>,
    completeness_of: impl Fn(NodeKey) -> f64,
) -> BTreeSet<NodeKey> {
    let (h, v) = config.hub_radii();
    let mut scored: Vec<(f64, NodeKey)> = box_cells(grids, node, h, v)
        .into_iter()
        .filter(|k| !proximity.contains(k))
        .map(|k| (completeness_of(k), k))
        .filter(|(c, _)| *c >= config.completeness_threshold)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(config.max_hubs);
    scored.into_iter().map(|(_, k)| k).collect()
}

/// Well-observed cells from the expanded box, at most `max_hubs` of them.
pub fn information_hubs(node: NodeKey, grids: &GraphGrids<'_>, config: &GraphConfig) -> Result<BTreeSet<NodeKey>> {
    if config.half_window == 0 {
        return Err(OxyError::InvalidWindow);
    }
    let proximity = proximity_neighbors(node, grids, config);
    Ok(select_hubs(node, grids, config, &proximity, |k| {
        cell_completeness(grids.observed, k, config.half_window).unwrap_or(0.0)
    }))
}

fn features(grids: &GraphGrids<'_>, m: NodeKey, n: NodeKey, cm: f64, cn: f64) -> [f64; EDGE_FEATURES] {
    if m == n {
        return [0.0; EDGE_FEATURES];
    }
    let levels = &grids.observed.depth_levels;
    let (zm, zn) = (levels[m.d], levels[n.d]);
    [
        great_circle_km(grids.lon_lat(m), grids.lon_lat(n)),
        (zn - zm).abs(),
        grids.density(n) - grids.density(m),
        zn - zm,
        cn - cm,
    ]
}

/// `[distance km, |Δdepth| m, Δdensity, Δpressure, Δcompleteness]`, signed parts taken as n minus m.
pub fn edge_features(m: NodeKey, n: NodeKey, grids: &GraphGrids<'_>, config: &GraphConfig) -> Result<[f64; EDGE_FEATURES]> {
    let cm = cell_completeness(grids.observed, m, config.half_window)?;
    let cn = cell_completeness(grids.observed, n, config.half_window)?;
    Ok(features(grids, m, n, cm, cn))
}

/// All ocean cells at year index `t` with their incoming edges.
pub fn build_snapshot(grids: &GraphGrids<'_>, config: &GraphConfig, t: usize) -> Result<GraphSnapshot> {
    config.validate()?;
    let dims = grids.dims();
    grids.observed.check()?;
    grids.bathymetry.check_dims(dims)?;
    if t >= dims.time {
        return Err(OxyError::Data(format!("year index {t} outside 0..{}", dims.time)));
    }
    let mut nodes = Vec::new();
    for i in 0..dims.lon {
        for j in 0..dims.lat {
            for d in 0..dims.depth {
                if grids.is_ocean(i, j, d) {
                    nodes.push(NodeKey::new(i, j, d, t));
                }
            }
        }
    }
    if nodes.is_empty() {
        return Err(OxyError::EmptyGraph(t));
    }
    let slice = dims.lon * dims.lat * dims.depth;
    let mut comp = vec![0.0; slice];
    for key in &nodes {
        comp[key.flat(dims) - t * slice] = cell_completeness(grids.observed, *key, config.half_window)?;
    }
    let lookup = |k: NodeKey| comp[k.flat(dims) - t * slice];
    let mut position = vec![usize::MAX; slice];
    for (p, key) in nodes.iter().enumerate() {
        position[key.flat(dims) - t * slice] = p;
    }

    let per_node: Vec<Vec<Edge>> = nodes
        .par_iter()
        .enumerate()
        .map(|(dst, &n)| {
            let proximity = proximity_neighbors(n, grids, config);
            let hubs = select_hubs(n, grids, config, &proximity, lookup);
            let cn = lookup(n);
            let mut edges = Vec::with_capacity(1 + proximity.len() + hubs.len());
            let sources = std::iter::once((n, EdgeKind::SelfLoop))
                .chain(proximity.iter().map(|&m| (m, EdgeKind::Proximity)))
                .chain(hubs.iter().map(|&m| (m, EdgeKind::Hub)));
            for (m, kind) in sources {
                edges.push(Edge {
                    src: position[m.flat(dims) - t * slice],
                    dst,
                    kind,
                    features: features(grids, m, n, lookup(m), cn),
                });
            }
            edges
        })
        .collect();

    let mut offsets = Vec::with_capacity(nodes.len() + 1);
    let mut edges = Vec::with_capacity(per_node.iter().map(Vec::len).sum());
    for run in per_node {
        offsets.push(edges.len());
        edges.extend(run);
    }
    offsets.push(edges.len());
    Ok(GraphSnapshot {
        t,
        dims,
        nodes,
        edges,
        offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagrid::Variable;

    fn ocean(dims: Dims) -> (Grid4D, Bathymetry) {
        let levels = (0..dims.depth).map(|d| d as f64 * 10.0).collect();
        (
            Grid4D::empty(dims, Variable::Oxygen, levels, 2000),
            Bathymetry::flat(dims.lon, dims.lat, -1000.0),
        )
    }

    #[test]
    fn completeness_values() {
        assert_eq!(completeness(&[true; 9], 4).unwrap(), 1.0);
        assert_eq!(completeness(&[false; 9], 4).unwrap(), 0.0);
        let w = [true, true, false, false, true, true, false, false, false];
        assert_eq!(completeness(&w, 4).unwrap(), 0.375);
        assert!(matches!(completeness(&[true], 0), Err(OxyError::InvalidWindow)));
    }

    #[test]
    fn interior_node_has_26_neighbours() {
        let (g, b) = ocean(Dims::new(5, 5, 3, 1));
        let grids = GraphGrids::new(&g, &b);
        let n = proximity_neighbors(NodeKey::new(2, 2, 1, 0), &grids, &GraphConfig::default());
        assert_eq!(n.len(), 26);
        let edge = proximity_neighbors(NodeKey::new(0, 2, 0, 0), &grids, &GraphConfig::default());
        assert!(edge.contains(&NodeKey::new(4, 2, 0, 0)));
        assert!(edge.iter().all(|k| k.d <= 1));
    }

    #[test]
    fn single_cell_and_all_land() {
        let (g, b) = ocean(Dims::new(1, 1, 1, 1));
        let snap = build_snapshot(&GraphGrids::new(&g, &b), &GraphConfig::default(), 0).unwrap();
        assert_eq!(snap.nodes.len(), 1);
        assert_eq!(snap.edges.len(), 1);
        assert_eq!(snap.edges[0].kind, EdgeKind::SelfLoop);
        assert_eq!(snap.edges[0].features, [0.0; 5]);
        let land = Bathymetry::flat(1, 1, 10.0);
        let err = build_snapshot(&GraphGrids::new(&g, &land), &GraphConfig::default(), 0);
        assert!(matches!(err, Err(OxyError::EmptyGraph(0))));
    }

    #[test]
    fn hub_cap_and_threshold() {
        let (mut g, b) = ocean(Dims::new(9, 9, 1, 3));
        for k in 0..g.dims.len() {
            g.mask[k] = true;
            g.values[k] = 1.0;
        }
        let grids = GraphGrids::new(&g, &b);
        let mut cfg = GraphConfig {
            completeness_threshold: 0.0,
            max_hubs: 4,
            ..Default::default()
        };
        let node = NodeKey::new(4, 4, 0, 1);
        assert_eq!(information_hubs(node, &grids, &cfg).unwrap().len(), 4);
        cfg.completeness_threshold = 1.0;
        let (g2, _) = ocean(Dims::new(9, 9, 1, 3));
        let sparse = GraphGrids::new(&g2, &b);
        assert!(information_hubs(node, &sparse, &cfg).unwrap().is_empty());
    }
}
