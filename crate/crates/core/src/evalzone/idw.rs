//! Inverse-distance-weighted interpolation baseline.

use serde::{Deserialize, Serialize};

use crate::datagrid::{great_circle_km, Bathymetry, Grid4D};
use crate::error::{OxyError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdwConfig {
    pub power: f64,
    pub radius_km: f64,
}

impl Default for IdwConfig {
    fn default() -> Self {
        Self {
            power: 2.0,
            radius_km: 3000.0,
        }
    }
}

/// Weighted mean of `(distance, value)` pairs; a zero distance returns that value.
pub fn idw_value(neighbours: &[(f64, f64)], power: f64) -> Option<f64> {
    if let Some(&(_, v)) = neighbours.iter().find(|(d, _)| *d == 0.0) {
        return Some(v);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(d, v) in neighbours {
        let w = d.powf(-power);
        num += w * v;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

/// Fills every ocean cell from observations on the same level and year.
///
/// Cells with nothing inside `radius_km` take the level-year mean; a level-year with
/// no observations at all is an error when it has cells to fill.
pub fn baseline_idw(obs: &Grid4D, bathymetry: Option<&Bathymetry>, config: &IdwConfig) -> Result<Grid4D> {
    let dims = obs.dims;
    if let Some(b) = bathymetry {
        b.check_dims(dims)?;
    }
    let mut out = Grid4D::empty(dims, obs.variable, obs.depth_levels.clone(), obs.year_origin);
    for t in 0..dims.time {
        for d in 0..dims.depth {
            let mut support = Vec::new();
            let mut targets = Vec::new();
            for j in 0..dims.lat {
                for i in 0..dims.lon {
                    if bathymetry.is_some_and(|b| !b.is_ocean(i, j, obs.depth_levels[d])) {
                        continue;
                    }
                    let k = dims.index(i, j, d, t);
                    targets.push((i, j, k));
                    if obs.mask[k] {
                        support.push(((dims.lon_center(i), dims.lat_center(j)), obs.values[k]));
                    }
                }
            }
            if targets.is_empty() {
                continue;
            }
            if support.is_empty() {
                return Err(OxyError::NoSupport {
                    variable: obs.variable,
                    depth: d,
                    year: t,
                });
            }
            let mean = support.iter().map(|s| s.1).sum::<f64>() / support.len() as f64;
            for (i, j, k) in targets {
                if obs.mask[k] {
                    out.values[k] = obs.values[k];
                    out.mask[k] = true;
                    continue;
                }
                let here = (dims.lon_center(i), dims.lat_center(j));
                let near: Vec<(f64, f64)> = support
                    .iter()
                    .map(|(p, v)| (great_circle_km(here, *p), *v))
                    .filter(|(dist, _)| *dist <= config.radius_km)
                    .collect();
                out.values[k] = idw_value(&near, config.power).unwrap_or(mean);
                out.mask[k] = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_examples() {
        assert_eq!(idw_value(&[(1.0, 100.0), (1.0, 200.0)], 2.0), Some(150.0));
        let v = idw_value(&[(1.0, 100.0), (2.0, 400.0)], 2.0).unwrap();
        assert!((v - 160.0).abs() < 1e-12);
        assert_eq!(idw_value(&[(0.0, 7.0), (1.0, 100.0)], 2.0), Some(7.0));
        assert_eq!(idw_value(&[], 2.0), None);
    }
}
