use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datagrid::{AreaTable, Grid4D};
use crate::error::{OxyError, Result};

/// MAPE in percent; RMSE and MAE in the variable's units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mape: f64,
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
    pub n: usize,
    /// Observations equal to zero, left out of MAPE.
    pub zero_skipped: usize,
}

/// Scores predictions on the entries where `mask` is set.
pub fn metrics(observed: &[f64], predicted: &[f64], mask: &[bool]) -> Result<MetricsReport> {
    if observed.len() != predicted.len() || observed.len() != mask.len() {
        return Err(OxyError::Data("metric inputs differ in length".into()));
    }
    let pairs: Vec<(f64, f64)> = (0..observed.len())
        .filter(|&k| mask[k])
        .map(|k| (observed[k], predicted[k]))
        .collect();
    metrics_pairs(&pairs)
}

pub fn metrics_pairs(pairs: &[(f64, f64)]) -> Result<MetricsReport> {
    let n = pairs.len();
    if n == 0 {
        return Err(OxyError::NoData);
    }
    let nf = n as f64;
    let mean = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let (mut sse, mut sae, mut sst, mut ape, mut n_ape) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for &(x, y) in pairs {
        let r = x - y;
        sse += r * r;
        sae += r.abs();
        sst += (x - mean) * (x - mean);
        if x != 0.0 {
            ape += (r / x).abs();
            n_ape += 1;
        }
    }
    Ok(MetricsReport {
        mape: if n_ape > 0 { 100.0 * ape / n_ape as f64 } else { f64::NAN },
        rmse: (sse / nf).sqrt(),
        mae: sae / nf,
        r2: if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN },
        n,
        zero_skipped: n - n_ape,
    })
}

/// Pooled and grouped scores of a gridded field against observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub pooled: MetricsReport,
    pub by_year: BTreeMap<i32, MetricsReport>,
    pub by_depth: BTreeMap<usize, MetricsReport>,
    pub by_region: BTreeMap<usize, MetricsReport>,
    /// Keyed by `(i, j)` horizontal cell; too large for the JSON form, see `grouped_csv`.
    #[serde(skip)]
    pub by_cell: BTreeMap<(usize, usize), MetricsReport>,
}

impl FieldReport {
    /// One row per group: `group,key,mape,rmse,mae,r2,n`.
    pub fn grouped_csv(&self) -> Vec<String> {
        let mut lines = vec!["group,key,mape,rmse,mae,r2,n".to_string()];
        let mut push = |group: &str, key: String, m: &MetricsReport| {
            lines.push(format!("{group},{key},{:.6},{:.6},{:.6},{:.6},{}", m.mape, m.rmse, m.mae, m.r2, m.n));
        };
        push("pooled", "all".into(), &self.pooled);
        for (k, m) in &self.by_year {
            push("year", k.to_string(), m);
        }
        for (k, m) in &self.by_depth {
            push("depth", k.to_string(), m);
        }
        for (k, m) in &self.by_region {
            push("region", k.to_string(), m);
        }
        for ((i, j), m) in &self.by_cell {
            push("cell", format!("{i}:{j}"), m);
        }
        lines
    }
}

fn grouped<K: Ord + Copy>(pairs: &[(f64, f64)], keys: &[K]) -> Result<BTreeMap<K, MetricsReport>> {
    let mut buckets: BTreeMap<K, Vec<(f64, f64)>> = BTreeMap::new();
    for (p, k) in pairs.iter().zip(keys) {
        buckets.entry(*k).or_default().push(*p);
    }
    buckets.into_iter().map(|(k, v)| Ok((k, metrics_pairs(&v)?))).collect()
}

/// Scores `field` on every cell observed in `obs`; missing field cells count as errors.
pub fn evaluate_external_field(field: &Grid4D, obs: &Grid4D, areas: &AreaTable) -> Result<FieldReport> {
    field.same_dims(obs)?;
    evaluate_cells(field, obs, &obs.observed_indices(), areas)
}

/// Scores `field` against `obs` on the listed flat cells.
pub fn evaluate_cells(field: &Grid4D, obs: &Grid4D, cells: &[usize], areas: &AreaTable) -> Result<FieldReport> {
    field.same_dims(obs)?;
    let dims = obs.dims;
    let mut pairs = Vec::with_capacity(cells.len());
    for &k in cells {
        if !obs.mask[k] {
            return Err(OxyError::Data(format!("cell {k} is not observed")));
        }
        if !field.mask[k] {
            return Err(OxyError::IncompleteField(1));
        }
        pairs.push((obs.values[k], field.values[k]));
    }
    let unravel: Vec<_> = cells.iter().map(|&k| dims.unravel(k)).collect();
    let years: Vec<i32> = unravel.iter().map(|c| obs.year(c.3)).collect();
    let depths: Vec<usize> = unravel.iter().map(|c| c.2).collect();
    let columns: Vec<(usize, usize)> = unravel.iter().map(|c| (c.0, c.1)).collect();
    let regions: Vec<usize> = unravel
        .iter()
        .map(|c| areas.assign_area(dims.lon_center(c.0), dims.lat_center(c.1)))
        .collect();
    Ok(FieldReport {
        pooled: metrics_pairs(&pairs)?,
        by_year: grouped(&pairs, &years)?,
        by_depth: grouped(&pairs, &depths)?,
        by_region: grouped(&pairs, &regions)?,
        by_cell: grouped(&pairs, &columns)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let m = metrics(&[100.0, 200.0], &[110.0, 180.0], &[true, true]).unwrap();
        assert!((m.mape - 10.0).abs() < 1e-12);
        assert!((m.mae - 15.0).abs() < 1e-12);
        assert!((m.rmse - 250f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_mean_predictors() {
        let x = [1.0, 2.0, 4.0];
        let m = metrics(&x, &x, &[true; 3]).unwrap();
        assert_eq!((m.mape, m.rmse, m.mae, m.r2), (0.0, 0.0, 0.0, 1.0));
        let mean = [7.0 / 3.0; 3];
        assert!(metrics(&x, &mean, &[true; 3]).unwrap().r2.abs() < 1e-12);
        assert!(matches!(metrics(&x, &x, &[false; 3]), Err(OxyError::NoData)));
    }

    #[test]
    fn zero_observations_skip_mape() {
        let m = metrics(&[0.0, 10.0], &[1.0, 11.0], &[true, true]).unwrap();
        assert_eq!(m.zero_skipped, 1);
        assert!((m.mape - 10.0).abs() < 1e-12);
    }
}
