//! Splits, whole-field reconstruction, and 4-fold cross-testing.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{make_batch, prepare, Dataset, Prepared, Split};
use super::trainer::{train, TrainConfig, TrainResult};
use crate::datagrid::Grid4D;
use crate::error::{OxyError, Result};
use crate::evalzone::{baseline_idw, metrics_pairs, zone_points, IdwConfig, MetricsReport};
use crate::oceangraph::GraphConfig;
use crate::oxynet::{forward, predict, ModelConfig, ModelParams, Normalization};

pub const FOLDS: usize = 4;
const PREDICT_CHUNK: usize = 256;

/// Seeded partition into four folds whose sizes differ by at most one.
pub fn fold_partition(cells: &[usize], seed: u64) -> Vec<Vec<usize>> {
    let mut shuffled = cells.to_vec();
    shuffled.sort_unstable();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let mut folds = Vec::with_capacity(FOLDS);
    let mut start = 0;
    for k in 0..FOLDS {
        let len = n / FOLDS + usize::from(k < n % FOLDS);
        let mut f = shuffled[start..start + len].to_vec();
        f.sort_unstable();
        folds.push(f);
        start += len;
    }
    folds
}

/// Moves `fraction` of each area's cells (rounded, at least one when the area has two or
/// more) into the validation set.
pub fn validation_split(dataset: &Dataset, cells: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut per_area: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &c in cells {
        per_area.entry(dataset.area_of(c)).or_default().push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut list) in per_area {
        list.sort_unstable();
        list.shuffle(&mut rng);
        let mut take = (fraction * list.len() as f64).round() as usize;
        if fraction > 0.0 && take == 0 && list.len() >= 2 {
            take = 1;
        }
        val.extend_from_slice(&list[..take]);
        train.extend_from_slice(&list[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Train/validation/test split for fold `k` (1-based).
pub fn fold_split(dataset: &Dataset, k: usize, seed: u64, val_fraction: f64) -> Result<Split> {
    if !(1..=FOLDS).contains(&k) {
        return Err(OxyError::Config(format!("fold {k} outside 1..=4")));
    }
    let cells = dataset.observed_cells();
    let folds = fold_partition(&cells, seed);
    let test = folds[k - 1].clone();
    if test.is_empty() {
        return Err(OxyError::DegenerateFold(k));
    }
    let rest: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != k - 1)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let (train, val) = validation_split(dataset, &rest, val_fraction, seed.wrapping_add(k as u64));
    Ok(Split { train, val, test })
}

/// Model predictions in µmol/kg for arbitrary ocean cells.
pub fn predict_cells(
    prepared: &Prepared,
    params: &ModelParams,
    model: &ModelConfig,
    norm: &Normalization,
    cells: &[usize],
) -> Result<Vec<f64>> {
    let mut by_year: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &c in cells {
        by_year.entry(prepared.locate(c)?.0).or_default().push(c);
    }
    let chunks: Vec<Vec<usize>> = by_year
        .values()
        .flat_map(|v| v.chunks(PREDICT_CHUNK).map(<[usize]>::to_vec))
        .collect();
    let results = chunks
        .par_iter()
        .map(|chunk| {
            let batch = make_batch(prepared, &prepared.input, chunk, &[], 0, model)?;
            Ok(batch.cells.into_iter().zip(predict(params, model, &batch.features, norm)?).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let lookup: BTreeMap<usize, f64> = results.into_iter().flatten().collect();
    Ok(cells.iter().map(|c| lookup[c]).collect())
}

/// Hypernetwork zone embeddings `vec(α) ‖ β` for `cells`, in the given order.
///
/// Errors with `Config` when the model has no zoning stage.
pub fn zone_embeddings(
    prepared: &Prepared,
    params: &ModelParams,
    model: &ModelConfig,
    cells: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if !model.uses_zoning() {
        return Err(OxyError::Config("model has no zoning-varying stage".into()));
    }
    let chunks: Vec<&[usize]> = cells.chunks(PREDICT_CHUNK).collect();
    let results = chunks
        .par_iter()
        .map(|chunk| {
            let batch = make_batch(prepared, &prepared.input, chunk, &[], 0, model)?;
            let out = forward(params, model, &batch.features, None)?;
            let (alpha, beta) = out.zones.ok_or_else(|| OxyError::Config("model has no zoning-varying stage".into()))?;
            let rows = Arc::clone(&batch.features.targets);
            let d = model.zone_dim;
            let alpha = alpha.reshape(&[alpha.shape()[0], d * d])?;
            let points = zone_points(
                alpha.gather_rows(&rows)?.data(),
                beta.gather_rows(&rows)?.data(),
                model.zone_dim,
            );
            Ok(batch.cells.into_iter().zip(points).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lookup: BTreeMap<usize, Vec<f64>> = results.into_iter().flatten().collect();
    Ok(cells.iter().map(|c| lookup.remove(c).unwrap_or_default()).collect())
}

/// Complete field over every ocean cell.
pub fn reconstruct(prepared: &Prepared, params: &ModelParams, model: &ModelConfig, norm: &Normalization) -> Result<Grid4D> {
    let input = &prepared.input;
    let cells: Vec<usize> = prepared
        .snapshots
        .iter()
        .flat_map(|s| s.nodes.iter().map(|k| k.flat(input.dims)))
        .collect();
    let values = predict_cells(prepared, params, model, norm, &cells)?;
    let mut out = Grid4D::empty(input.dims, input.variable, input.depth_levels.clone(), input.year_origin);
    for (c, v) in cells.into_iter().zip(values) {
        out.values[c] = v;
        out.mask[c] = true;
    }
    Ok(out)
}

fn score(dataset: &Dataset, cells: &[usize], predicted: &[f64]) -> Result<MetricsReport> {
    let pairs: Vec<(f64, f64)> = cells
        .iter()
        .zip(predicted)
        .map(|(&c, &p)| (dataset.observed.values[c], p))
        .collect();
    metrics_pairs(&pairs)
}

/// Everything produced by training and testing on one fold.
pub struct FoldOutcome {
    pub k: usize,
    pub split: Split,
    pub prepared: Prepared,
    pub result: TrainResult,
    pub model: MetricsReport,
    pub mean_baseline: MetricsReport,
    pub idw_baseline: MetricsReport,
}

/// Trains on one fold and scores the model and both classical baselines on its test cells.
pub fn run_fold(
    dataset: &Dataset,
    graph: &GraphConfig,
    model: &ModelConfig,
    config: &TrainConfig,
    split_seed: u64,
) -> Result<FoldOutcome> {
    let split = fold_split(dataset, config.fold, split_seed, config.val_fraction)?;
    let prepared = prepare(dataset, &split.train, graph, None)?;
    let result = train(dataset, &prepared, &split.train, &split.val, model, config)?;
    let predicted = predict_cells(&prepared, &result.params, &result.model, &result.norm, &split.test)?;
    let model_report = score(dataset, &split.test, &predicted)?;

    let train_mean = split.train.iter().map(|&c| dataset.observed.values[c]).sum::<f64>() / split.train.len() as f64;
    let mean_report = score(dataset, &split.test, &vec![train_mean; split.test.len()])?;
    let idw = baseline_idw(&prepared.input, Some(&dataset.bathymetry), &IdwConfig::default())?;
    let idw_pred: Vec<f64> = split.test.iter().map(|&c| idw.values[c]).collect();
    let idw_report = score(dataset, &split.test, &idw_pred)?;
    Ok(FoldOutcome {
        k: config.fold,
        split,
        prepared,
        result,
        model: model_report,
        mean_baseline: mean_report,
        idw_baseline: idw_report,
    })
}

/// Per-fold results for one method and their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodFolds {
    pub name: String,
    pub folds: Vec<MetricsReport>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (n - 1 denominator; zero for a single value).
pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

impl MethodFolds {
    pub fn summary(&self) -> [MeanStd; 4] {
        let pick = |f: fn(&MetricsReport) -> f64| mean_std(&self.folds.iter().map(f).collect::<Vec<_>>());
        [pick(|m| m.mape), pick(|m| m.r2), pick(|m| m.rmse), pick(|m| m.mae)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossfoldReport {
    pub methods: Vec<MethodFolds>,
}

impl CrossfoldReport {
    /// Per-fold rows for the first method, then the average row.
    pub fn folds_csv(&self) -> Vec<String> {
        let mut lines = vec!["fold,mape,r2,rmse,mae,n".to_string()];
        let m = &self.methods[0];
        for (k, f) in m.folds.iter().enumerate() {
            lines.push(format!("{},{:.6},{:.6},{:.6},{:.6},{}", k + 1, f.mape, f.r2, f.rmse, f.mae, f.n));
        }
        let [mape, r2, rmse, mae] = m.summary();
        let n: usize = m.folds.iter().map(|f| f.n).sum();
        lines.push(format!("average,{:.6},{:.6},{:.6},{:.6},{}", mape.mean, r2.mean, rmse.mean, mae.mean, n));
        lines
    }

    /// Benchmark table: MAPE per fold, then averaged MAPE, R2, RMSE, MAE as mean±std.
    pub fn table1_csv(&self) -> Vec<String> {
        let mut lines = vec![
            "Benchmark,k=1,k=2,k=3,k=4,Average Performance,,,".to_string(),
            ",MAPE,MAPE,MAPE,MAPE,MAPE,R2,RMSE,MAE".to_string(),
        ];
        for m in &self.methods {
            let mut row = vec![m.name.clone()];
            row.extend(m.folds.iter().map(|f| format!("{:.2}", f.mape)));
            let [mape, r2, rmse, mae] = m.summary();
            row.push(format!("{:.2}±{:.2}", mape.mean, mape.std));
            row.push(format!("{:.4}±{:.4}", r2.mean, r2.std));
            row.push(format!("{:.2}±{:.2}", rmse.mean, rmse.std));
            row.push(format!("{:.2}±{:.2}", mae.mean, mae.std));
            lines.push(row.join(","));
        }
        lines
    }
}

/// Trains and tests on all four folds.
pub fn crossfold(
    dataset: &Dataset,
    graph: &GraphConfig,
    model: &ModelConfig,
    config: &TrainConfig,
    split_seed: u64,
) -> Result<(CrossfoldReport, Vec<FoldOutcome>)> {
    let mut outcomes = Vec::with_capacity(FOLDS);
    for k in 1..=FOLDS {
        let cfg = TrainConfig { fold: k, ..config.clone() };
        outcomes.push(run_fold(dataset, graph, model, &cfg, split_seed)?);
    }
    let collect = |name: &str, f: fn(&FoldOutcome) -> &MetricsReport| MethodFolds {
        name: name.to_string(),
        folds: outcomes.iter().map(|o| f(o).clone()).collect(),
    };
    let report = CrossfoldReport {
        methods: vec![
            collect("OxyGenerator", |o| &o.model),
            collect("IDW", |o| &o.idw_baseline),
            collect("Mean predictor", |o| &o.mean_baseline),
        ],
    };
    Ok((report, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_cells() {
        let cells: Vec<usize> = (0..103).map(|k| k * 3).collect();
        let folds = fold_partition(&cells, 5);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, cells);
    }

    #[test]
    fn sample_std_of_fold_values() {
        let s = mean_std(&[14.72, 13.48, 15.72, 13.20]);
        assert!((s.mean - 14.28).abs() < 1e-9);
        assert!((s.std - 1.165).abs() < 1e-3);
    }
}
