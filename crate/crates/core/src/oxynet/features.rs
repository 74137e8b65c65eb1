//! Per-node input assembly with zero-fill and mask channels.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tensorad::Tensor;

use crate::datagrid::derived::{density_or_reference, S0, T0};
use crate::datagrid::{to_spherical, Grid4D, Variable};
use crate::error::{OxyError, Result};
use crate::oceangraph::{GraphSnapshot, NodeKey, Subgraph, EDGE_FEATURES};

/// Spherical xyz, normalised depth, normalised year.
pub const GEO_WIDTH: usize = 5;
/// Six factor values followed by their six mask bits.
pub const ENV_WIDTH: usize = 12;
/// Spherical xyz, normalised depth, temperature, salinity, density, pressure.
pub const XI_WIDTH: usize = 8;
/// Columns of the nutrient values within the factor block.
pub const NITRATE_COL: usize = 2;
pub const PHOSPHATE_COL: usize = 3;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
}

impl Stats {
    pub const IDENTITY: Stats = Stats { mean: 0.0, std: 1.0 };

    pub fn fit(values: impl Iterator<Item = f64>) -> Stats {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return Stats::IDENTITY;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        Stats {
            mean,
            std: if std > 1e-9 { std } else { 1.0 },
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Affine standardisation fitted on training data and stored with the checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub oxygen: Stats,
    pub factors: [Stats; 6],
    pub density: Stats,
    pub pressure: Stats,
    pub edges: [Stats; EDGE_FEATURES],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            oxygen: Stats::IDENTITY,
            factors: [Stats::IDENTITY; 6],
            density: Stats::IDENTITY,
            pressure: Stats::IDENTITY,
            edges: [Stats::IDENTITY; EDGE_FEATURES],
        }
    }
}

fn observed(grid: &Grid4D) -> impl Iterator<Item = f64> + '_ {
    grid.values.iter().zip(&grid.mask).filter(|(_, m)| **m).map(|(v, _)| *v)
}

impl Normalization {
    pub fn fit(inputs: &ModelInputs<'_>, snapshot: Option<&GraphSnapshot>) -> Normalization {
        let mut n = Normalization {
            oxygen: Stats::fit(observed(inputs.oxygen)),
            ..Default::default()
        };
        for (s, g) in n.factors.iter_mut().zip(&inputs.factors) {
            if let Some(g) = g {
                *s = Stats::fit(observed(g));
            }
        }
        let levels = &inputs.oxygen.depth_levels;
        n.pressure = Stats::fit(levels.iter().copied());
        let dims = inputs.oxygen.dims;
        n.density = Stats::fit((0..dims.len()).map(|k| inputs.density_at(k)));
        if let Some(s) = snapshot {
            for f in 0..EDGE_FEATURES {
                n.edges[f] = Stats::fit(s.edges.iter().map(|e| e.features[f]));
            }
        }
        n
    }
}

/// Grids the model reads; `oxygen` must already hide every held-out cell.
#[derive(Copy, Clone, Debug)]
pub struct ModelInputs<'a> {
    pub oxygen: &'a Grid4D,
    /// Observed factor grids in `Variable::FACTORS` order.
    pub factors: [Option<&'a Grid4D>; 6],
}

impl<'a> ModelInputs<'a> {
    pub fn new(oxygen: &'a Grid4D, factors: [Option<&'a Grid4D>; 6]) -> Result<Self> {
        for g in factors.iter().flatten() {
            oxygen.same_dims(g)?;
        }
        Ok(Self { oxygen, factors })
    }

    fn factor_at(&self, f: usize, k: usize) -> Option<f64> {
        self.factors[f].and_then(|g| g.mask[k].then(|| g.values[k]))
    }

    fn temperature_at(&self, k: usize) -> Option<f64> {
        self.factor_at(0, k)
    }

    fn salinity_at(&self, k: usize) -> Option<f64> {
        self.factor_at(1, k)
    }

    pub fn density_at(&self, k: usize) -> f64 {
        density_or_reference(self.temperature_at(k), self.salinity_at(k))
    }
}

/// Dense inputs for one subgraph, all in normalised units.
#[derive(Clone, Debug)]
pub struct BatchFeatures {
    pub keys: Vec<NodeKey>,
    pub window_values: Tensor,
    pub window_mask: Tensor,
    pub geo: Tensor,
    /// `[N, 6]` factor values, zero where unobserved.
    pub env_values: Tensor,
    pub env_mask: Tensor,
    pub xi: Tensor,
    pub edge_features: Tensor,
    pub src: Arc<Vec<usize>>,
    pub dst: Arc<Vec<usize>>,
    pub inv_degree: Tensor,
    /// Per message-passing round, the edges whose destination still feeds a target.
    pub layer_edges: Vec<LayerEdges>,
    pub targets: Arc<Vec<usize>>,
}

/// Edge subset used by one message-passing round.
#[derive(Clone, Debug)]
pub struct LayerEdges {
    pub edges: Arc<Vec<usize>>,
    pub src: Arc<Vec<usize>>,
    pub dst: Arc<Vec<usize>>,
}

impl LayerEdges {
    fn select(src: &[usize], dst: &[usize], keep: impl Fn(usize) -> bool) -> LayerEdges {
        let edges: Vec<usize> = (0..src.len()).filter(|&e| keep(dst[e])).collect();
        LayerEdges {
            src: Arc::new(edges.iter().map(|&e| src[e]).collect()),
            dst: Arc::new(edges.iter().map(|&e| dst[e]).collect()),
            edges: Arc::new(edges),
        }
    }

    fn offset(&self, node_base: usize, edge_base: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        (
            self.edges.iter().map(|e| e + edge_base).collect(),
            self.src.iter().map(|s| s + node_base).collect(),
            self.dst.iter().map(|d| d + node_base).collect(),
        )
    }
}

impl BatchFeatures {
    pub fn node_count(&self) -> usize {
        self.keys.len()
    }

    pub fn target_keys(&self) -> Vec<NodeKey> {
        self.targets.iter().map(|&k| self.keys[k]).collect()
    }

    /// Whether factor `col` is observed at local node `n`.
    pub fn factor_observed(&self, n: usize, col: usize) -> bool {
        self.env_mask.data()[n * 6 + col] == 1.0
    }

    pub fn build(
        inputs: &ModelInputs<'_>,
        norm: &Normalization,
        snapshot: &GraphSnapshot,
        sub: &Subgraph,
        half_window: usize,
        layers: usize,
    ) -> Result<BatchFeatures> {
        let grid = inputs.oxygen;
        let dims = grid.dims;
        if snapshot.dims != dims {
            return Err(OxyError::Dims(snapshot.dims.as_array(), dims.as_array()));
        }
        let n = sub.nodes.len();
        let w = 2 * half_window;
        let keys: Vec<NodeKey> = sub.nodes.iter().map(|&g| snapshot.nodes[g]).collect();
        let max_depth = grid.depth_levels.last().copied().unwrap_or(1.0).max(1.0);
        let year_span = (dims.time.max(2) - 1) as f64;

        let mut wv = Vec::with_capacity(n * w);
        let mut wm = Vec::with_capacity(n * w);
        let mut geo = Vec::with_capacity(n * GEO_WIDTH);
        let mut ev = Vec::with_capacity(n * 6);
        let mut em = Vec::with_capacity(n * 6);
        let mut xi = Vec::with_capacity(n * XI_WIDTH);
        for key in &keys {
            let offsets = (1..=half_window).rev().map(|o| -(o as i64)).chain((1..=half_window).map(|o| o as i64));
            for o in offsets {
                let tau = key.t as i64 + o;
                let hit = (0..dims.time as i64)
                    .contains(&tau)
                    .then(|| dims.index(key.i, key.j, key.d, tau as usize))
                    .filter(|&k| grid.mask[k]);
                match hit {
                    Some(k) => {
                        wv.push(norm.oxygen.forward(grid.values[k]));
                        wm.push(1.0);
                    }
                    None => {
                        wv.push(0.0);
                        wm.push(0.0);
                    }
                }
            }
            let k = key.flat(dims);
            let xyz = to_spherical(dims.lon_center(key.i), dims.lat_center(key.j));
            let depth = grid.depth_levels[key.d];
            let depth_norm = depth / max_depth;
            geo.extend_from_slice(&xyz);
            geo.push(depth_norm);
            geo.push(key.t as f64 / year_span);
            for f in 0..6 {
                match inputs.factor_at(f, k) {
                    Some(v) => {
                        ev.push(norm.factors[f].forward(v));
                        em.push(1.0);
                    }
                    None => {
                        ev.push(0.0);
                        em.push(0.0);
                    }
                }
            }
            xi.extend_from_slice(&xyz);
            xi.push(depth_norm);
            xi.push(norm.factors[0].forward(inputs.temperature_at(k).unwrap_or(T0)));
            xi.push(norm.factors[1].forward(inputs.salinity_at(k).unwrap_or(S0)));
            xi.push(norm.density.forward(inputs.density_at(k)));
            xi.push(norm.pressure.forward(depth));
        }

        let e = sub.edges.len();
        let mut ef = Vec::with_capacity(e * EDGE_FEATURES);
        let mut src = Vec::with_capacity(e);
        let mut dst = Vec::with_capacity(e);
        let mut degree = vec![0usize; n];
        for edge in &sub.edges {
            for (f, v) in edge.features.iter().enumerate() {
                ef.push(norm.edges[f].forward(*v));
            }
            src.push(edge.src);
            dst.push(edge.dst);
            degree[edge.dst] += 1;
        }
        let inv: Vec<f64> = degree.iter().map(|&d| if d > 0 { 1.0 / d as f64 } else { 0.0 }).collect();
        let layer_edges = (0..layers)
            .map(|l| LayerEdges::select(&src, &dst, |n| sub.depth[n] + l < layers))
            .collect();
        let t = |shape: &[usize], data: Vec<f64>| Tensor::new(shape, data);
        Ok(BatchFeatures {
            window_values: t(&[n, w], wv)?,
            window_mask: t(&[n, w], wm)?,
            geo: t(&[n, GEO_WIDTH], geo)?,
            env_values: t(&[n, 6], ev)?,
            env_mask: t(&[n, 6], em)?,
            xi: t(&[n, XI_WIDTH], xi)?,
            edge_features: t(&[e, EDGE_FEATURES], ef)?,
            src: Arc::new(src),
            dst: Arc::new(dst),
            inv_degree: t(&[n, 1], inv)?,
            layer_edges,
            targets: Arc::new(sub.targets.clone()),
            keys,
        })
    }
}

/// Factor variable for an env column.
pub fn factor_variable(col: usize) -> Variable {
    Variable::FACTORS[col]
}

impl BatchFeatures {
    /// Disjoint union of batches, e.g. subgraphs from different years.
    pub fn merge(parts: &[BatchFeatures]) -> Result<BatchFeatures> {
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        if parts.is_empty() {
            return Err(OxyError::Data("cannot merge zero batches".into()));
        }
        let cat = |f: fn(&BatchFeatures) -> &Tensor| -> Result<Tensor> {
            let refs: Vec<&Tensor> = parts.iter().map(f).collect();
            Ok(Tensor::concat(&refs, 0)?)
        };
        let (mut keys, mut src, mut dst, mut targets) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let layers = parts[0].layer_edges.len();
        let mut layer_parts: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> = vec![Default::default(); layers];
        for p in parts {
            if p.layer_edges.len() != layers {
                return Err(OxyError::Data("merged batches disagree on layer count".into()));
            }
            let (base, edge_base) = (keys.len(), src.len());
            for (acc, le) in layer_parts.iter_mut().zip(&p.layer_edges) {
                let (e, s, d) = le.offset(base, edge_base);
                acc.0.extend(e);
                acc.1.extend(s);
                acc.2.extend(d);
            }
            keys.extend_from_slice(&p.keys);
            src.extend(p.src.iter().map(|s| s + base));
            dst.extend(p.dst.iter().map(|d| d + base));
            targets.extend(p.targets.iter().map(|t| t + base));
        }
        let layer_edges = layer_parts
            .into_iter()
            .map(|(e, s, d)| LayerEdges {
                edges: Arc::new(e),
                src: Arc::new(s),
                dst: Arc::new(d),
            })
            .collect();
        Ok(BatchFeatures {
            window_values: cat(|b| &b.window_values)?,
            window_mask: cat(|b| &b.window_mask)?,
            geo: cat(|b| &b.geo)?,
            env_values: cat(|b| &b.env_values)?,
            env_mask: cat(|b| &b.env_mask)?,
            xi: cat(|b| &b.xi)?,
            edge_features: cat(|b| &b.edge_features)?,
            inv_degree: cat(|b| &b.inv_degree)?,
            layer_edges,
            src: Arc::new(src),
            dst: Arc::new(dst),
            targets: Arc::new(targets),
            keys,
        })
    }
}
