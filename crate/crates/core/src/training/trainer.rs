//! The area-rebalanced optimisation loop.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tensorad::{grad, Tape, Tensor};

use super::data::{area_batches, Batch, Dataset, Prepared};
use super::losses::{chem_candidates, chem_regularizer, reconstruction_loss, total_loss, Nutrient};
use super::schedule::{rebalance_areas, AreaSchedule};
use crate::error::{OxyError, Result};
use crate::oxynet::{forward, init_params, ModelConfig, ModelParams, Normalization, TemporalEncoder};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ablation {
    pub no_zoning: bool,
    pub no_chem_reg: bool,
    pub no_env: bool,
    pub no_temporal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Gradient steps per epoch, shared out across areas.
    pub iteration_budget: usize,
    pub seed: u64,
    pub ablation: Ablation,
    /// Held-out fold, 1 to 4.
    pub fold: usize,
    pub patience: usize,
    pub val_fraction: f64,
    /// Upper bound on penalty nodes per batch and nutrient.
    pub max_chem_nodes: usize,
    /// Unsupervised nutrient-observed cells added to each training batch for the penalty.
    pub chem_probes: usize,
    /// Global gradient-norm clip; `None` disables it.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 32,
            iteration_budget: 60,
            seed: 11,
            ablation: Ablation::default(),
            fold: 1,
            patience: 10,
            val_fraction: 0.1,
            max_chem_nodes: 32,
            chem_probes: 8,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.learning_rate > 0.0) {
            return Err(OxyError::Config("lambda must be >= 0 and learning_rate > 0".into()));
        }
        if self.batch_size == 0 || self.iteration_budget == 0 {
            return Err(OxyError::Config("batch_size and iteration_budget must be positive".into()));
        }
        if !(1..=4).contains(&self.fold) {
            return Err(OxyError::Config("fold must be 1, 2, 3, or 4".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(OxyError::Config("val_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn effective_lambda(&self) -> f64 {
        if self.ablation.no_chem_reg {
            0.0
        } else {
            self.lambda
        }
    }
}

/// Applies the ablation switches to the architecture.
pub fn effective_model(model: &ModelConfig, train: &TrainConfig) -> ModelConfig {
    let mut m = model.clone();
    if train.ablation.no_zoning {
        m.arch.zoning = false;
    }
    if train.ablation.no_env {
        m.arch.env = false;
    }
    if train.ablation.no_temporal {
        m.arch.temporal = TemporalEncoder::Off;
    }
    m
}

/// Adaptive moment estimation with bias correction.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.values().iter().map(|t| vec![0.0; t.numel()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, params: &ModelParams, grads: &[Vec<f64>]) -> Result<ModelParams> {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let mut out = Vec::with_capacity(grads.len());
        for (k, (p, g)) in params.values().iter().zip(grads).enumerate() {
            let mut data = p.to_vec();
            for e in 0..data.len() {
                self.m[k][e] = self.beta1 * self.m[k][e] + (1.0 - self.beta1) * g[e];
                self.v[k][e] = self.beta2 * self.v[k][e] + (1.0 - self.beta2) * g[e] * g[e];
                let mh = self.m[k][e] / c1;
                let vh = self.v[k][e] / c2;
                data[e] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
            out.push(Tensor::new(p.shape(), data)?);
        }
        params.with_values(out)
    }
}

/// Outcome of one gradient step.
#[derive(Clone, Debug, Default)]
pub struct StepStats {
    pub loss: f64,
    pub recon: f64,
    pub r_n: f64,
    pub r_p: f64,
    pub grad_n: Option<(f64, f64)>,
    pub grad_p: Option<(f64, f64)>,
}

fn mean_var(v: &[f64]) -> Option<(f64, f64)> {
    if v.len() < 2 {
        return None;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    Some((m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n))
}

/// Loss, penalty terms, and parameter gradients for one batch.
pub fn loss_and_grads(
    params: &ModelParams,
    model: &ModelConfig,
    batch: &Batch,
    lambda: f64,
    max_chem_nodes: usize,
) -> Result<(StepStats, Vec<Vec<f64>>)> {
    let tape = Tape::new();
    let p = params.track(&tape);
    let out = forward(&p, model, &batch.features, Some(&tape))?;
    let l_r = reconstruction_loss(&out.prediction, &batch.targets, &batch.supervised)?;
    let penalise = lambda > 0.0;
    let hops = model.layers();
    let mut terms = Vec::new();
    for (nutrient, leaf) in [(Nutrient::Nitrate, &out.nitrate), (Nutrient::Phosphate, &out.phosphate)] {
        if !model.arch.env {
            terms.push((Tensor::scalar(0.0), Vec::new()));
            continue;
        }
        let cand = chem_candidates(&batch.features, nutrient, max_chem_nodes);
        let term = chem_regularizer(&out.prediction, leaf, &batch.features, &cand, hops, penalise)?;
        terms.push((term.penalty, term.gradients));
    }
    let (r_n, g_n) = terms.remove(0);
    let (r_p, g_p) = terms.remove(0);
    let total = if penalise {
        total_loss(&l_r, &r_n, &r_p, lambda)?
    } else {
        l_r.clone()
    };
    let refs: Vec<&Tensor> = p.values().iter().collect();
    let grads = grad(&total, &refs, false)?.into_iter().map(|g| g.to_vec()).collect();
    Ok((
        StepStats {
            loss: total.item(),
            recon: l_r.item(),
            r_n: r_n.item(),
            r_p: r_p.item(),
            grad_n: mean_var(&g_n),
            grad_p: mean_var(&g_p),
        },
        grads,
    ))
}

fn clip(grads: &mut [Vec<f64>], max_norm: f64) {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    /// Area position, or `all` for the epoch aggregate.
    pub area: String,
    pub iter_count: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    #[serde(rename = "R_N")]
    pub r_n: f64,
    #[serde(rename = "R_P")]
    pub r_p: f64,
    #[serde(rename = "grad_N_mean")]
    pub grad_n_mean: f64,
    #[serde(rename = "grad_N_var")]
    pub grad_n_var: f64,
    #[serde(rename = "grad_P_mean")]
    pub grad_p_mean: f64,
    #[serde(rename = "grad_P_var")]
    pub grad_p_var: f64,
}

#[derive(Default)]
struct Acc {
    steps: usize,
    loss: f64,
    r_n: f64,
    r_p: f64,
    gn: (f64, f64, usize),
    gp: (f64, f64, usize),
}

impl Acc {
    fn add(&mut self, s: &StepStats) {
        self.steps += 1;
        self.loss += s.loss;
        self.r_n += s.r_n;
        self.r_p += s.r_p;
        for (acc, g) in [(&mut self.gn, s.grad_n), (&mut self.gp, s.grad_p)] {
            if let Some((m, v)) = g {
                acc.0 += m;
                acc.1 += v;
                acc.2 += 1;
            }
        }
    }

    fn row(&self, epoch: usize, area: String, val_loss: f64) -> HistoryRow {
        let avg = |x: f64, n: usize| if n > 0 { x / n as f64 } else { f64::NAN };
        HistoryRow {
            epoch,
            area,
            iter_count: self.steps,
            train_loss: avg(self.loss, self.steps),
            val_loss,
            r_n: avg(self.r_n, self.steps),
            r_p: avg(self.r_p, self.steps),
            grad_n_mean: avg(self.gn.0, self.gn.2),
            grad_n_var: avg(self.gn.1, self.gn.2),
            grad_p_mean: avg(self.gp.0, self.gp.2),
            grad_p_var: avg(self.gp.1, self.gp.2),
        }
    }
}

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

pub struct TrainResult {
    pub params: ModelParams,
    pub model: ModelConfig,
    pub norm: Normalization,
    pub history: Vec<HistoryRow>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub schedule: AreaSchedule,
    /// Epoch at which a non-finite loss or gradient stopped training; `params` then hold
    /// the last finite state.
    pub diverged: Option<usize>,
}

impl TrainResult {
    /// Aggregate rows, one per epoch.
    pub fn epoch_rows(&self) -> Vec<&HistoryRow> {
        self.history.iter().filter(|r| r.area == "all").collect()
    }
}

/// Mean normalised squared error per area, plus the pooled mean. Areas without cells get NaN.
pub fn validation_losses(
    params: &ModelParams,
    model: &ModelConfig,
    batches: &[Vec<Batch>],
) -> Result<(Vec<f64>, f64)> {
    let per_batch: Vec<Vec<(f64, usize)>> = batches
        .par_iter()
        .map(|area| {
            area.iter()
                .map(|b| {
                    let out = forward(params, model, &b.features, None)?;
                    let sse: f64 = out
                        .prediction
                        .data()
                        .iter()
                        .zip(&b.targets)
                        .zip(&b.supervised)
                        .filter(|(_, &s)| s)
                        .map(|((p, t), _)| (p - t) * (p - t))
                        .sum();
                    Ok((sse, b.supervised_count()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_area = Vec::with_capacity(per_batch.len());
    let (mut total, mut count) = (0.0, 0usize);
    for area in &per_batch {
        let sse: f64 = area.iter().map(|x| x.0).sum();
        let n: usize = area.iter().map(|x| x.1).sum();
        per_area.push(if n > 0 { sse / n as f64 } else { f64::NAN });
        total += sse;
        count += n;
    }
    Ok((per_area, if count > 0 { total / count as f64 } else { f64::NAN }))
}

/// Runs the optimisation loop on `train_cells`, monitoring `val_cells`.
pub fn train(
    dataset: &Dataset,
    prepared: &Prepared,
    train_cells: &[usize],
    val_cells: &[usize],
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    let model = effective_model(model, config);
    model.validate()?;
    let lambda = config.effective_lambda();
    let train_batches = area_batches(dataset, prepared, train_cells, &model, config.batch_size, Some(config.seed), config.chem_probes)?;
    let val_batches = area_batches(dataset, prepared, val_cells, &model, config.batch_size.max(64), None, 0)?;
    let active: Vec<usize> = (0..train_batches.len()).filter(|&a| !train_batches[a].is_empty()).collect();
    if active.is_empty() {
        return Err(OxyError::EmptySupervision);
    }
    let mut schedule = AreaSchedule::uniform(active.len(), config.iteration_budget)?;

    let mut params = init_params(&model);
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut cursor = vec![0usize; train_batches.len()];
    let mut orders: Vec<Vec<usize>> = train_batches.iter().map(|b| (0..b.len()).collect()).collect();
    let mut history = Vec::new();
    let (mut best, mut best_params, mut best_epoch) = (f64::INFINITY, params.clone(), 0);
    let mut since_best = 0;
    let mut diverged = None;
    let mut epochs_run = 0;

    'epochs: for epoch in 1..=config.epochs {
        epochs_run = epoch;
        let mut epoch_acc = Acc::default();
        let mut area_accs: Vec<Acc> = (0..active.len()).map(|_| Acc::default()).collect();
        for (slot, &a) in active.iter().enumerate() {
            for _ in 0..schedule.counts[slot] {
                if cursor[a] == 0 {
                    orders[a].shuffle(&mut rng);
                }
                let batch = &train_batches[a][orders[a][cursor[a]]];
                cursor[a] = (cursor[a] + 1) % orders[a].len();
                let (stats, mut grads) = loss_and_grads(&params, &model, batch, lambda, config.max_chem_nodes)?;
                let finite = stats.loss.is_finite() && grads.iter().flatten().all(|g| g.is_finite());
                if !finite {
                    diverged = Some(epoch);
                    break 'epochs;
                }
                if let Some(c) = config.clip_norm {
                    clip(&mut grads, c);
                }
                let next = adam.update(&params, &grads)?;
                if !next.all_finite() {
                    diverged = Some(epoch);
                    break 'epochs;
                }
                params = next;
                area_accs[slot].add(&stats);
                epoch_acc.add(&stats);
            }
        }

        let (per_area, pooled) = validation_losses(&params, &model, &val_batches)?;
        let active_losses: Vec<f64> = active.iter().map(|&a| per_area[a]).collect();
        let finite: Vec<f64> = active_losses.iter().copied().filter(|v| v.is_finite()).collect();
        let fill = if finite.is_empty() {
            epoch_acc.loss / epoch_acc.steps.max(1) as f64
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let filled: Vec<f64> = active_losses.iter().map(|v| if v.is_finite() { *v } else { fill }).collect();
        for (slot, &a) in active.iter().enumerate() {
            history.push(area_accs[slot].row(epoch, a.to_string(), per_area[a]));
        }
        let monitor = if pooled.is_finite() { pooled } else { fill };
        history.push(epoch_acc.row(epoch, "all".into(), monitor));
        if !monitor.is_finite() {
            diverged = Some(epoch);
            break;
        }
        schedule = rebalance_areas(&filled, config.iteration_budget)?;

        if monitor < best {
            best = monitor;
            best_params = params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let final_params = if diverged.is_none() && best_epoch > 0 { best_params } else { params };
    Ok(TrainResult {
        params: final_params,
        model,
        norm: prepared.norm.clone(),
        history,
        best_epoch,
        epochs_run,
        schedule,
        diverged,
    })
}
