use serde::{Deserialize, Serialize};

use super::grid::Dims;
use crate::error::{OxyError, Result};

/// Seafloor elevation per horizontal cell, metres, negative below sea level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bathymetry {
    pub lon_cells: usize,
    pub lat_cells: usize,
    /// Row-major over (lat, lon), longitude fastest.
    pub elevation: Vec<f64>,
}

impl Bathymetry {
    pub fn flat(lon_cells: usize, lat_cells: usize, elevation: f64) -> Self {
        Self {
            lon_cells,
            lat_cells,
            elevation: vec![elevation; lon_cells * lat_cells],
        }
    }

    pub fn elevation(&self, i: usize, j: usize) -> f64 {
        self.elevation[j * self.lon_cells + i]
    }

    pub fn set(&mut self, i: usize, j: usize, elevation: f64) {
        self.elevation[j * self.lon_cells + i] = elevation;
    }

    /// A cell at `depth` metres is water when the seafloor lies at or below it.
    pub fn is_ocean(&self, i: usize, j: usize, depth: f64) -> bool {
        depth <= -self.elevation(i, j)
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        if self.lon_cells != dims.lon
            || self.lat_cells != dims.lat
            || self.elevation.len() != self.lon_cells * self.lat_cells
        {
            return Err(OxyError::Data(format!(
                "bathymetry is {}x{}, grid is {}x{}",
                self.lon_cells, self.lat_cells, dims.lon, dims.lat
            )));
        }
        Ok(())
    }

    /// Ocean flags for every (i, j, d) cell of one time slice, in grid order.
    pub fn ocean_mask(&self, dims: Dims, depth_levels: &[f64]) -> Vec<bool> {
        let mut out = Vec::with_capacity(dims.lon * dims.lat * dims.depth);
        for &z in depth_levels.iter().take(dims.depth) {
            for j in 0..dims.lat {
                for i in 0..dims.lon {
                    out.push(self.is_ocean(i, j, z));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ocean_iff_depth_above_seafloor() {
        let mut b = Bathymetry::flat(2, 1, -100.0);
        b.set(1, 0, 50.0);
        assert!(b.is_ocean(0, 0, 100.0));
        assert!(!b.is_ocean(0, 0, 100.5));
        assert!(!b.is_ocean(1, 0, 0.0));
    }
}
