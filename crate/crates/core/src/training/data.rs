//! Datasets, splits, prepared model inputs, and minibatches.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datagrid::{AreaTable, Bathymetry, Grid4D, Variable};
use crate::error::{OxyError, Result};
use crate::oceangraph::{build_snapshot, receptive_subgraph, GraphConfig, GraphGrids, GraphSnapshot, NodeKey};
use crate::oxynet::{BatchFeatures, ModelConfig, ModelInputs, Normalization};
use crate::synthlab::SynthFixture;

/// Observed oxygen plus the auxiliary grids and geography it lives on.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub observed: Grid4D,
    /// Observed factor grids in `Variable::FACTORS` order.
    pub factors: Vec<Option<Grid4D>>,
    pub bathymetry: Bathymetry,
    pub areas: AreaTable,
}

impl Dataset {
    pub fn from_fixture(f: &SynthFixture) -> Dataset {
        Dataset {
            observed: f.do_observed.clone(),
            factors: f.factor_observed.iter().cloned().map(Some).collect(),
            bathymetry: f.bathymetry.clone(),
            areas: f.areas.clone(),
        }
    }

    pub fn factor_refs(&self) -> [Option<&Grid4D>; 6] {
        std::array::from_fn(|k| self.factors.get(k).and_then(Option::as_ref))
    }

    pub fn check(&self) -> Result<()> {
        self.observed.check()?;
        if self.observed.variable != Variable::Oxygen {
            return Err(OxyError::Data("observed grid must hold DO".into()));
        }
        self.bathymetry.check_dims(self.observed.dims)?;
        for (k, g) in self.factors.iter().enumerate() {
            if let Some(g) = g {
                self.observed.same_dims(g)?;
                if g.variable != Variable::FACTORS[k] {
                    return Err(OxyError::Data(format!("factor slot {k} holds {}", g.variable)));
                }
            }
        }
        if self.areas.is_empty() {
            return Err(OxyError::Data("area table is empty".into()));
        }
        Ok(())
    }

    /// Observed ocean cells, ascending.
    pub fn observed_cells(&self) -> Vec<usize> {
        let dims = self.observed.dims;
        self.observed
            .observed_indices()
            .into_iter()
            .filter(|&k| {
                let (i, j, d, _) = dims.unravel(k);
                self.bathymetry.is_ocean(i, j, self.observed.depth_levels[d])
            })
            .collect()
    }

    /// Position in the area table of the cell's column.
    pub fn area_of(&self, cell: usize) -> usize {
        let dims = self.observed.dims;
        let (i, j, _, _) = dims.unravel(cell);
        let id = self.areas.assign_area(dims.lon_center(i), dims.lat_center(j));
        self.areas.position(id).unwrap_or(self.areas.len() - 1)
    }
}

/// Disjoint flat-index cell sets.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Inputs with only training cells visible, the yearly graphs, and normalisation.
pub struct Prepared {
    pub input: Grid4D,
    pub factors: Vec<Option<Grid4D>>,
    pub snapshots: Vec<GraphSnapshot>,
    pub norm: Normalization,
}

impl Prepared {
    pub fn inputs(&self) -> Result<ModelInputs<'_>> {
        ModelInputs::new(&self.input, std::array::from_fn(|k| self.factors.get(k).and_then(Option::as_ref)))
    }

    /// `(year index, snapshot position)` of a flat cell.
    pub fn locate(&self, cell: usize) -> Result<(usize, usize)> {
        let (i, j, d, t) = self.input.dims.unravel(cell);
        self.snapshots[t]
            .position(&NodeKey::new(i, j, d, t))
            .map(|p| (t, p))
            .ok_or_else(|| OxyError::Data(format!("cell {cell} is not an ocean node")))
    }
}

/// Hides everything except `visible` and builds one graph per year.
pub fn prepare(
    dataset: &Dataset,
    visible: &[usize],
    graph: &GraphConfig,
    norm: Option<Normalization>,
) -> Result<Prepared> {
    dataset.check()?;
    let mut keep = vec![false; dataset.observed.dims.len()];
    for &k in visible {
        keep[k] = true;
    }
    let input = dataset.observed.masked_by(&keep);
    build_prepared(input, dataset.factors.clone(), &dataset.bathymetry, graph, norm)
}

pub fn build_prepared(
    input: Grid4D,
    factors: Vec<Option<Grid4D>>,
    bathymetry: &Bathymetry,
    graph: &GraphConfig,
    norm: Option<Normalization>,
) -> Result<Prepared> {
    let mut grids = GraphGrids::new(&input, bathymetry);
    if let (Some(Some(t)), Some(Some(s))) = (factors.first(), factors.get(1)) {
        grids = grids.with_physics(t, s);
    }
    let snapshots = (0..input.dims.time)
        .into_par_iter()
        .map(|t| build_snapshot(&grids, graph, t))
        .collect::<Result<Vec<_>>>()?;
    let mut prepared = Prepared {
        input,
        factors,
        snapshots,
        norm: Normalization::default(),
    };
    prepared.norm = match norm {
        Some(n) => n,
        None => Normalization::fit(&prepared.inputs()?, prepared.snapshots.first()),
    };
    Ok(prepared)
}

/// A minibatch with its normalised supervision targets.
///
/// `cells`, `targets` and `supervised` are aligned with the prediction rows. Unsupervised
/// rows are chemistry probes: cells with an observed nutrient that only the regulariser sees.
pub struct Batch {
    pub area: usize,
    pub cells: Vec<usize>,
    pub features: BatchFeatures,
    pub targets: Vec<f64>,
    pub supervised: Vec<bool>,
}

impl Batch {
    pub fn supervised_count(&self) -> usize {
        self.supervised.iter().filter(|&&s| s).count()
    }
}

/// Builds one batch from cells that may span several years, followed by `probes`.
pub fn make_batch(
    prepared: &Prepared,
    truth: &Grid4D,
    cells: &[usize],
    probes: &[usize],
    area: usize,
    model: &ModelConfig,
) -> Result<Batch> {
    let inputs = prepared.inputs()?;
    let mut by_year: BTreeMap<usize, Vec<(usize, usize, bool)>> = BTreeMap::new();
    for (&c, sup) in cells.iter().map(|c| (c, true)).chain(probes.iter().map(|c| (c, false))) {
        let (t, p) = prepared.locate(c)?;
        by_year.entry(t).or_default().push((p, c, sup));
    }
    let mut parts = Vec::new();
    let (mut batch_cells, mut supervised) = (Vec::new(), Vec::new());
    for (t, rows) in by_year {
        let targets: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let sub = receptive_subgraph(&prepared.snapshots[t], &targets, model.layers());
        parts.push(BatchFeatures::build(&inputs, &prepared.norm, &prepared.snapshots[t], &sub, model.half_window, model.layers())?);
        batch_cells.extend(rows.iter().map(|r| r.1));
        supervised.extend(rows.iter().map(|r| r.2));
    }
    let features = BatchFeatures::merge(&parts)?;
    let targets = batch_cells
        .iter()
        .zip(&supervised)
        .map(|(&c, &sup)| {
            if sup && truth.mask[c] {
                prepared.norm.oxygen.forward(truth.values[c])
            } else {
                0.0
            }
        })
        .collect();
    Ok(Batch {
        area,
        cells: batch_cells,
        features,
        targets,
        supervised,
    })
}

/// Groups each area's cells by year and chunks every area-year set into batches of at
/// most `batch_size`. Cells are shuffled within the year when `shuffle_seed` is given.
///
/// With `probes > 0` every batch also carries up to `probes` cells of its area-year where
/// nitrate or phosphate is observed, drawn with the same seed.
pub fn area_batches(
    dataset: &Dataset,
    prepared: &Prepared,
    cells: &[usize],
    model: &ModelConfig,
    batch_size: usize,
    shuffle_seed: Option<u64>,
    probes: usize,
) -> Result<Vec<Vec<Batch>>> {
    let per_year = dataset.observed.dims.len() / dataset.observed.dims.time.max(1);
    let mut per_area: Vec<BTreeMap<usize, Vec<usize>>> = vec![BTreeMap::new(); dataset.areas.len()];
    for &c in cells {
        per_area[dataset.area_of(c)].entry(c / per_year).or_default().push(c);
    }
    let pools = if probes > 0 { nutrient_pools(dataset, prepared) } else { BTreeMap::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed.unwrap_or(0));
    let mut jobs = Vec::new();
    for (a, years) in per_area.iter_mut().enumerate() {
        for (t, list) in years.iter_mut() {
            if shuffle_seed.is_some() {
                list.shuffle(&mut rng);
            }
            for chunk in list.chunks(batch_size.max(1)) {
                let mut probe: Vec<usize> = pools
                    .get(&(a, *t))
                    .map(|p| p.iter().copied().filter(|c| !chunk.contains(c)).collect())
                    .unwrap_or_default();
                probe.shuffle(&mut rng);
                probe.truncate(probes);
                probe.sort_unstable();
                jobs.push((a, chunk.to_vec(), probe));
            }
        }
    }
    let built = jobs
        .par_iter()
        .map(|(a, chunk, probe)| make_batch(prepared, &dataset.observed, chunk, probe, *a, model))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Vec<Batch>> = (0..dataset.areas.len()).map(|_| Vec::new()).collect();
    for b in built {
        out[b.area].push(b);
    }
    Ok(out)
}

/// Ocean nodes with observed nitrate or phosphate, keyed by `(area, year index)`.
fn nutrient_pools(dataset: &Dataset, prepared: &Prepared) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut pools: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let dims = prepared.input.dims;
    let cols = [crate::oxynet::NITRATE_COL, crate::oxynet::PHOSPHATE_COL];
    for (t, snap) in prepared.snapshots.iter().enumerate() {
        for key in &snap.nodes {
            let c = key.flat(dims);
            let seen = cols
                .iter()
                .any(|&k| prepared.factors.get(k).and_then(Option::as_ref).is_some_and(|g| g.mask[c]));
            if seen {
                pools.entry((dataset.area_of(c), t)).or_default().push(c);
            }
        }
    }
    pools
}
