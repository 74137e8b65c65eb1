//! Oxygen minimum zone extent.

use serde::{Deserialize, Serialize};

use crate::datagrid::{Bathymetry, Dims, Grid4D, Variable};
use crate::error::{OxyError, Result};

pub const OMZ_THRESHOLD: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmzYear {
    pub year: i32,
    /// Area-weighted share of ocean columns with minimum oxygen at or below the threshold.
    pub rho: f64,
    pub omz_columns: usize,
    pub ocean_columns: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmzReport {
    pub years: Vec<OmzYear>,
    /// One depth level; 1 marks an OMZ column, 0 an oxygenated ocean column.
    pub mask: Grid4D,
}

/// Per-year OMZ share with cos(latitude) column weights.
///
/// Ocean cells come from `bathymetry` when given; otherwise every cell is ocean.
/// Every ocean cell of `field` must be filled.
pub fn omz_stats(field: &Grid4D, bathymetry: Option<&Bathymetry>, threshold: f64) -> Result<OmzReport> {
    let dims = field.dims;
    if let Some(b) = bathymetry {
        b.check_dims(dims)?;
    }
    let is_ocean = |i: usize, j: usize, d: usize| bathymetry.is_none_or(|b| b.is_ocean(i, j, field.depth_levels[d]));
    let missing = (0..dims.len())
        .filter(|&k| {
            let (i, j, d, _) = dims.unravel(k);
            is_ocean(i, j, d) && !field.mask[k]
        })
        .count();
    if missing > 0 {
        return Err(OxyError::IncompleteField(missing));
    }
    let mask_dims = Dims::new(dims.lon, dims.lat, 1, dims.time);
    let mut mask = Grid4D::empty(mask_dims, Variable::OmzFlag, vec![field.depth_levels[0]], field.year_origin);
    let mut years = Vec::with_capacity(dims.time);
    for t in 0..dims.time {
        let (mut omz_w, mut ocean_w) = (0.0, 0.0);
        let (mut omz_n, mut ocean_n) = (0, 0);
        for j in 0..dims.lat {
            let (mut row_omz, mut row_ocean) = (0usize, 0usize);
            for i in 0..dims.lon {
                let min = (0..dims.depth)
                    .filter(|&d| is_ocean(i, j, d))
                    .map(|d| field.values[dims.index(i, j, d, t)])
                    .fold(f64::INFINITY, f64::min);
                if min == f64::INFINITY {
                    continue;
                }
                row_ocean += 1;
                let flag = min <= threshold;
                row_omz += flag as usize;
                mask.set(i, j, 0, t, if flag { 1.0 } else { 0.0 });
            }
            // Weighting per row keeps the ratio exact when each row holds the same share.
            let w = dims.lat_center(j).to_radians().cos();
            omz_w += w * row_omz as f64;
            ocean_w += w * row_ocean as f64;
            omz_n += row_omz;
            ocean_n += row_ocean;
        }
        years.push(OmzYear {
            year: field.year(t),
            rho: if ocean_w > 0.0 { omz_w / ocean_w } else { 0.0 },
            omz_columns: omz_n,
            ocean_columns: ocean_n,
        });
    }
    Ok(OmzReport { years, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(dims: Dims, v: f64) -> Grid4D {
        let mut g = Grid4D::empty(dims, Variable::Oxygen, (0..dims.depth).map(|d| d as f64).collect(), 2000);
        for k in 0..dims.len() {
            g.values[k] = v;
            g.mask[k] = true;
        }
        g
    }

    #[test]
    fn uniform_field_has_no_omz() {
        let r = omz_stats(&uniform(Dims::new(4, 2, 2, 1), 100.0), None, OMZ_THRESHOLD).unwrap();
        assert_eq!(r.years[0].rho, 0.0);
    }

    #[test]
    fn one_of_four_columns() {
        let dims = Dims::new(4, 1, 2, 1);
        let mut g = uniform(dims, 100.0);
        g.set(2, 0, 1, 0, 20.0);
        let r = omz_stats(&g, None, OMZ_THRESHOLD).unwrap();
        assert_eq!(r.years[0].rho, 0.25);
        assert_eq!(r.mask.get(2, 0, 0, 0), Some(1.0));
    }

    #[test]
    fn missing_cell_is_an_error() {
        let mut g = uniform(Dims::new(2, 2, 1, 1), 100.0);
        g.clear(0);
        assert!(matches!(omz_stats(&g, None, 30.0), Err(OxyError::IncompleteField(1))));
    }
}
