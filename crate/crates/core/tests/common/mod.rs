//! Brute-force oracles shared by the integration suites. None of them call the
//! implementation paths they are compared against.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oxyrecon::datagrid::{Bathymetry, Dims, Grid4D, Record, Variable};
use oxyrecon::oceangraph::{build_snapshot, EdgeKind, GraphConfig, GraphGrids, NodeKey};

/// `(mape %, rmse, mae, r2)` by direct summation over the masked entries.
pub fn brute_metrics(obs: &[f64], pred: &[f64], mask: &[bool]) -> (f64, f64, f64, f64) {
    let idx: Vec<usize> = (0..obs.len()).filter(|&k| mask[k]).collect();
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&k| obs[k]).sum::<f64>() / n;
    let mut ape = Vec::new();
    let (mut se, mut ae, mut tot) = (0.0, 0.0, 0.0);
    for &k in &idx {
        let e = pred[k] - obs[k];
        se += e * e;
        ae += e.abs();
        tot += (obs[k] - mean).powi(2);
        if obs[k] != 0.0 {
            ape.push((e / obs[k]).abs());
        }
    }
    let mape = 100.0 * ape.iter().sum::<f64>() / ape.len() as f64;
    (mape, (se / n).sqrt(), ae / n, 1.0 - se / tot)
}

fn lon_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Every ocean cell of year `t` within the box, found by scanning the whole lattice.
pub fn brute_box(
    node: NodeKey,
    dims: Dims,
    ocean: &dyn Fn(usize, usize, usize) -> bool,
    horizontal: usize,
    vertical: usize,
) -> BTreeSet<NodeKey> {
    let mut out = BTreeSet::new();
    for i in 0..dims.lon {
        for j in 0..dims.lat {
            for d in 0..dims.depth {
                let key = NodeKey::new(i, j, d, node.t);
                let inside = lon_distance(i, node.i, dims.lon) <= horizontal
                    && j.abs_diff(node.j) <= horizontal
                    && d.abs_diff(node.d) <= vertical;
                if inside && key != node && ocean(i, j, d) {
                    out.insert(key);
                }
            }
        }
    }
    out
}

/// Share of the `2T` years around `t` (centre excluded) where the cell is observed.
pub fn brute_completeness(mask: &Grid4D, key: NodeKey, half_window: usize) -> f64 {
    let dims = mask.dims;
    let mut hits = 0;
    for tau in 0..dims.time {
        let offset = tau.abs_diff(key.t);
        if offset >= 1 && offset <= half_window && mask.mask[dims.index(key.i, key.j, key.d, tau)] {
            hits += 1;
        }
    }
    hits as f64 / (2 * half_window) as f64
}

#[allow(clippy::too_many_arguments)]
pub fn brute_hubs(
    node: NodeKey,
    mask: &Grid4D,
    ocean: &dyn Fn(usize, usize, usize) -> bool,
    delta: usize,
    depth_radius: usize,
    factor: f64,
    threshold: f64,
    max_hubs: usize,
    half_window: usize,
) -> BTreeSet<NodeKey> {
    let dims = mask.dims;
    let near = brute_box(node, dims, ocean, delta, depth_radius);
    let wide = brute_box(
        node,
        dims,
        ocean,
        (factor * delta as f64).floor() as usize,
        (factor * depth_radius as f64).floor() as usize,
    );
    let mut scored: Vec<(f64, NodeKey)> = wide
        .difference(&near)
        .map(|&k| (brute_completeness(mask, k, half_window), k))
        .filter(|(c, _)| *c >= threshold)
        .collect();
    // Highest completeness first; insertion sort keeps the oracle free of comparator tricks.
    let mut ranked: Vec<(f64, NodeKey)> = Vec::new();
    for item in scored.drain(..) {
        let pos = ranked
            .iter()
            .position(|r| item.0 > r.0 || (item.0 == r.0 && item.1 < r.1))
            .unwrap_or(ranked.len());
        ranked.insert(pos, item);
    }
    ranked.into_iter().take(max_hubs).map(|(_, k)| k).collect()
}

/// Cell means of one variable, accumulated one record at a time.
pub fn brute_grid(
    records: &[Record],
    variable: Variable,
    lon_cells: usize,
    lat_cells: usize,
    levels: &[f64],
    years: (i32, i32),
    bathymetry: &Bathymetry,
) -> BTreeMap<(usize, usize, usize, usize), f64> {
    let mut acc: BTreeMap<(usize, usize, usize, usize), (f64, usize)> = BTreeMap::new();
    for r in records {
        if r.variable != variable || r.year < years.0 || r.year > years.1 {
            continue;
        }
        if !(-180.0..=180.0).contains(&r.lon) || !(-90.0..=90.0).contains(&r.lat) || r.depth < 0.0 {
            continue;
        }
        let cutoff = levels[levels.len() - 1] + (levels[levels.len() - 1] - levels[levels.len() - 2]) / 2.0;
        if r.depth > cutoff {
            continue;
        }
        let mut d = 0;
        for (k, &z) in levels.iter().enumerate() {
            if (r.depth - z).abs() < (r.depth - levels[d]).abs() {
                d = k;
            }
        }
        let width = 360.0 / lon_cells as f64;
        let mut i = ((r.lon + 180.0) / width).floor() as usize;
        if i == lon_cells {
            i = 0;
        }
        let height = 180.0 / lat_cells as f64;
        let j = (((r.lat + 90.0) / height).floor() as usize).min(lat_cells - 1);
        if -bathymetry.elevation[j * lon_cells + i] < levels[d] {
            continue;
        }
        let e = acc.entry((i, j, d, (r.year - years.0) as usize)).or_insert((0.0, 0));
        e.0 += r.value;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub const LEVELS: [f64; 3] = [0.0, 100.0, 200.0];

/// Random lattice with some land columns and shallow shelves.
pub fn random_world(seed: u64, dims: Dims, observed: f64) -> (Grid4D, Bathymetry) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bathy = Bathymetry::flat(dims.lon, dims.lat, -5000.0);
    for j in 0..dims.lat {
        for i in 0..dims.lon {
            let e = match rng.random_range(0..6) {
                0 => 20.0,
                1 => -150.0,
                _ => -5000.0,
            };
            bathy.set(i, j, e);
        }
    }
    let mut grid = Grid4D::empty(dims, Variable::Oxygen, LEVELS[..dims.depth].to_vec(), 2000);
    for k in 0..dims.len() {
        if rng.random_bool(observed) {
            grid.values[k] = rng.random_range(50.0..300.0);
            grid.mask[k] = true;
        }
    }
    (grid, bathy)
}


/// Compares every yearly snapshot's incoming edges with the exhaustive scans.
/// Returns the number of edges checked.
pub fn check_snapshots(grid: &Grid4D, bathymetry: &Bathymetry, config: &GraphConfig) -> Result<usize, String> {
    let dims = grid.dims;
    let grids = GraphGrids::new(grid, bathymetry);
    let ocean = |i: usize, j: usize, d: usize| grid.depth_levels[d] <= -bathymetry.elevation(i, j);
    let mut checked = 0;
    for t in 0..dims.time {
        let snap = build_snapshot(&grids, config, t).map_err(|e| e.to_string())?;
        if build_snapshot(&grids, config, t).map_err(|e| e.to_string())? != snap {
            return Err(format!("year {t}: snapshot not reproducible"));
        }
        for (n, &key) in snap.nodes.iter().enumerate() {
            let prox = brute_box(key, dims, &ocean, config.delta, config.depth_radius);
            let hubs = brute_hubs(
                key,
                grid,
                &ocean,
                config.delta,
                config.depth_radius,
                config.hub_radius_factor,
                config.completeness_threshold,
                config.max_hubs,
                config.half_window,
            );
            let (mut seen, mut got_prox, mut got_hubs, mut loops) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), 0);
            for e in snap.in_edges(n) {
                let src = snap.nodes[e.src];
                if e.dst != n || !seen.insert(e.src) {
                    return Err(format!("{key:?}: misplaced or duplicate edge from {src:?}"));
                }
                match e.kind {
                    EdgeKind::SelfLoop if src == key => loops += 1,
                    EdgeKind::SelfLoop => return Err(format!("{key:?}: self loop from {src:?}")),
                    EdgeKind::Proximity => {
                        got_prox.insert(src);
                    }
                    EdgeKind::Hub => {
                        got_hubs.insert(src);
                    }
                }
                checked += 1;
            }
            if loops != 1 || got_prox != prox || got_hubs != hubs {
                return Err(format!("{key:?}: edges differ from the scan (loops {loops})"));
            }
        }
    }
    Ok(checked)
}
