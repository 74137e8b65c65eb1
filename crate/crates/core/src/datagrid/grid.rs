//! The dense 4D lattice and gridding of point records onto it.

use serde::{Deserialize, Serialize};

use super::bathymetry::Bathymetry;
use super::types::{Record, Variable};
use crate::error::{OxyError, Result};

/// Missing-value marker stored in `values` wherever the mask is clear.
pub const NA: f64 = -9.99e33;

/// Standard levels, 0 to 5500 m.
pub const STANDARD_DEPTHS: [f64; 33] = [
    0.0, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0, 125.0, 150.0, 200.0, 250.0, 300.0, 400.0, 500.0,
    600.0, 700.0, 800.0, 900.0, 1000.0, 1100.0, 1200.0, 1300.0, 1400.0, 1500.0, 1750.0, 2000.0,
    2500.0, 3000.0, 3500.0, 4000.0, 4500.0, 5000.0, 5500.0,
];

/// Cell counts per axis: longitude, latitude, depth, time.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub lon: usize,
    pub lat: usize,
    pub depth: usize,
    pub time: usize,
}

impl Dims {
    pub fn new(lon: usize, lat: usize, depth: usize, time: usize) -> Self {
        Self {
            lon,
            lat,
            depth,
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.lon * self.lat * self.depth * self.time
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.lon, self.lat, self.depth, self.time]
    }

    /// Flat index; time is the slowest axis, longitude the fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, d: usize, t: usize) -> usize {
        ((t * self.depth + d) * self.lat + j) * self.lon + i
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize, usize) {
        let i = idx % self.lon;
        let rest = idx / self.lon;
        let j = rest % self.lat;
        let rest = rest / self.lat;
        let d = rest % self.depth;
        (i, j, d, rest / self.depth)
    }

    /// Centre longitude of column `i` on a global equal-angle lattice.
    pub fn lon_center(&self, i: usize) -> f64 {
        -180.0 + (i as f64 + 0.5) * 360.0 / self.lon as f64
    }

    pub fn lat_center(&self, j: usize) -> f64 {
        -90.0 + (j as f64 + 0.5) * 180.0 / self.lat as f64
    }

    pub fn lon_index(&self, lon: f64) -> usize {
        let x = ((lon + 180.0) / 360.0 * self.lon as f64).floor() as i64;
        x.rem_euclid(self.lon as i64) as usize
    }

    pub fn lat_index(&self, lat: f64) -> usize {
        let y = ((lat + 90.0) / 180.0 * self.lat as f64).floor() as i64;
        y.clamp(0, self.lat as i64 - 1) as usize
    }
}

/// Dense lattice of one variable with its observation mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid4D {
    pub dims: Dims,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub variable: Variable,
    pub depth_levels: Vec<f64>,
    pub year_origin: i32,
}

impl Grid4D {
    pub fn empty(dims: Dims, variable: Variable, depth_levels: Vec<f64>, year_origin: i32) -> Self {
        Self {
            dims,
            values: vec![NA; dims.len()],
            mask: vec![false; dims.len()],
            variable,
            depth_levels,
            year_origin,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.values.len() != self.dims.len() || self.mask.len() != self.dims.len() {
            return Err(OxyError::Data("grid buffers do not match dims".into()));
        }
        if self.depth_levels.len() != self.dims.depth {
            return Err(OxyError::Data("depth level count does not match dims".into()));
        }
        if self.depth_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OxyError::Data("depth levels must be strictly increasing".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, d: usize, t: usize) -> Option<f64> {
        let k = self.dims.index(i, j, d, t);
        self.mask[k].then(|| self.values[k])
    }

    pub fn set(&mut self, i: usize, j: usize, d: usize, t: usize, value: f64) {
        let k = self.dims.index(i, j, d, t);
        self.values[k] = value;
        self.mask[k] = true;
    }

    pub fn clear(&mut self, idx: usize) {
        self.values[idx] = NA;
        self.mask[idx] = false;
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| self.mask[k]).collect()
    }

    pub fn same_dims(&self, other: &Grid4D) -> Result<()> {
        if self.dims != other.dims {
            return Err(OxyError::Dims(self.dims.as_array(), other.dims.as_array()));
        }
        Ok(())
    }

    /// Keeps only the cells where `keep` is true.
    pub fn masked_by(&self, keep: &[bool]) -> Grid4D {
        let mut out = self.clone();
        for (k, &keep) in keep.iter().enumerate() {
            if !keep {
                out.clear(k);
            }
        }
        out
    }

    pub fn year(&self, t: usize) -> i32 {
        self.year_origin + t as i32
    }
}

/// Target lattice for gridding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lon_cells: usize,
    pub lat_cells: usize,
    pub depth_levels: Vec<f64>,
    pub year_start: i32,
    pub year_end: i32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lon_cells: 360,
            lat_cells: 180,
            depth_levels: STANDARD_DEPTHS.to_vec(),
            year_start: 1920,
            year_end: 2023,
        }
    }
}

impl GridConfig {
    pub fn dims(&self) -> Dims {
        Dims::new(
            self.lon_cells,
            self.lat_cells,
            self.depth_levels.len(),
            (self.year_end - self.year_start + 1).max(0) as usize,
        )
    }
}

/// Index of the level nearest to `depth`; ties go to the shallower level.
/// `None` when the depth lies past the half-gap below the deepest level.
pub fn nearest_level(levels: &[f64], depth: f64) -> Option<usize> {
    let n = levels.len();
    if n == 0 || !depth.is_finite() || depth < 0.0 {
        return None;
    }
    let last_gap = if n > 1 { levels[n - 1] - levels[n - 2] } else { 0.0 };
    if depth > levels[n - 1] + last_gap / 2.0 {
        return None;
    }
    let mut best = 0;
    for (k, &level) in levels.iter().enumerate().skip(1) {
        if (depth - level).abs() < (depth - levels[best]).abs() {
            best = k;
        }
    }
    Some(best)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub gridded: usize,
    pub out_of_bounds: usize,
    pub on_land: usize,
    pub other_variable: usize,
    pub cells_observed: usize,
}

/// Cell-mean gridding of accepted records for one variable.
///
/// Values in each cell are summed in sorted order, so the result is
/// bit-identical for any permutation of `records`.
pub fn grid_records(
    records: &[Record],
    variable: Variable,
    config: &GridConfig,
    bathymetry: &Bathymetry,
) -> Result<(Grid4D, GridSummary)> {
    let dims = config.dims();
    if dims.is_empty() {
        return Err(OxyError::Config("grid has an empty axis".into()));
    }
    bathymetry.check_dims(dims)?;
    let mut summary = GridSummary::default();
    let mut hits: Vec<(usize, f64)> = Vec::with_capacity(records.len());
    for r in records {
        if r.variable != variable {
            summary.other_variable += 1;
            continue;
        }
        let in_time = r.year >= config.year_start && r.year <= config.year_end;
        let in_space = (-180.0..=180.0).contains(&r.lon) && (-90.0..=90.0).contains(&r.lat);
        let level = nearest_level(&config.depth_levels, r.depth);
        let (Some(d), true, true) = (level, in_time, in_space) else {
            summary.out_of_bounds += 1;
            continue;
        };
        let (i, j) = (dims.lon_index(r.lon), dims.lat_index(r.lat));
        if !bathymetry.is_ocean(i, j, config.depth_levels[d]) {
            summary.on_land += 1;
            continue;
        }
        let t = (r.year - config.year_start) as usize;
        hits.push((dims.index(i, j, d, t), r.value));
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    summary.gridded = hits.len();

    let mut grid = Grid4D::empty(dims, variable, config.depth_levels.clone(), config.year_start);
    let mut k = 0;
    while k < hits.len() {
        let cell = hits[k].0;
        let (mut sum, mut count) = (0.0, 0usize);
        while k < hits.len() && hits[k].0 == cell {
            sum += hits[k].1;
            count += 1;
            k += 1;
        }
        grid.values[cell] = sum / count as f64;
        grid.mask[cell] = true;
        summary.cells_observed += 1;
    }
    Ok((grid, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagrid::types::SourceDb;

    fn rec(lon: f64, lat: f64, depth: f64, year: i32, value: f64) -> Record {
        Record {
            source_db: SourceDb::Wod,
            lon,
            lat,
            depth,
            year,
            variable: Variable::Oxygen,
            value,
            raw_flag: "0".into(),
        }
    }

    fn small_config() -> GridConfig {
        GridConfig {
            lon_cells: 4,
            lat_cells: 2,
            depth_levels: vec![0.0, 10.0, 20.0, 30.0],
            year_start: 2000,
            year_end: 2001,
        }
    }

    #[test]
    fn nearest_level_rule_agrees_with_scan() {
        let levels = [0.0, 10.0, 20.0, 30.0, 50.0];
        assert_eq!(nearest_level(&levels, 14.0), Some(1));
        assert_eq!(nearest_level(&levels, 15.0), Some(1));
        assert_eq!(nearest_level(&levels, 40.0), Some(3));
        assert_eq!(nearest_level(&levels, 61.0), None);
        for step in 0..=600 {
            let depth = step as f64 * 0.1;
            let scan = levels
                .iter()
                .enumerate()
                .min_by(|a, b| (depth - a.1).abs().total_cmp(&(depth - b.1).abs()))
                .map(|(k, _)| k);
            assert_eq!(nearest_level(&levels, depth), scan, "depth {depth}");
        }
    }

    #[test]
    fn mean_of_records_in_one_cell() {
        let bathy = Bathymetry::flat(4, 2, -6000.0);
        let records = vec![rec(-170.0, -45.0, 9.0, 2000, 100.0), rec(-171.0, -44.0, 11.0, 2000, 200.0)];
        let (grid, summary) = grid_records(&records, Variable::Oxygen, &small_config(), &bathy).unwrap();
        assert_eq!(grid.get(0, 0, 1, 0), Some(150.0));
        assert_eq!(summary.cells_observed, 1);
        assert_eq!(grid.get(1, 0, 1, 0), None);
        assert_eq!(grid.values[grid.dims.index(1, 0, 1, 0)], NA);
    }

    #[test]
    fn out_of_bounds_and_land_are_counted() {
        let mut bathy = Bathymetry::flat(4, 2, -6000.0);
        bathy.set(1, 0, -15.0);
        let records = vec![
            rec(0.0, 0.0, 0.0, 1999, 1.0),
            rec(0.0, 0.0, 9000.0, 2000, 1.0),
            rec(-80.0, -10.0, 20.0, 2000, 1.0),
            rec(-80.0, -10.0, 10.0, 2000, 1.0),
        ];
        let (_, summary) = grid_records(&records, Variable::Oxygen, &small_config(), &bathy).unwrap();
        assert_eq!(summary.out_of_bounds, 2);
        assert_eq!(summary.on_land, 1);
        assert_eq!(summary.gridded, 1);
    }

    #[test]
    fn index_round_trip() {
        let dims = Dims::new(5, 4, 3, 2);
        for k in 0..dims.len() {
            let (i, j, d, t) = dims.unravel(k);
            assert_eq!(dims.index(i, j, d, t), k);
        }
    }
}
