//! Forward pass: temporal and factor encoders, zoning hypernetwork, message passing, readout.

use std::sync::Arc;

use tensorad::{Tape, Tensor};

use super::config::{ModelConfig, TemporalEncoder};
use super::features::{BatchFeatures, Normalization, NITRATE_COL, PHOSPHATE_COL};
use super::params::ModelParams;
use crate::error::Result;

pub const DO_MIN: f64 = 0.0;
pub const DO_MAX: f64 = 523.0;

/// `x @ w + b` for the parameters `{name}.w`, `{name}.b`.
pub fn dense(x: &Tensor, params: &ModelParams, name: &str) -> Result<Tensor> {
    Ok(x
        .matmul(params.get(&format!("{name}.w")))?
        .add(params.get(&format!("{name}.b")))?)
}

/// One LSTM step with gates packed as input, forget, cell, output.
pub fn lstm_step(
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
    params: &ModelParams,
    name: &str,
    hidden: usize,
) -> Result<(Tensor, Tensor)> {
    let z = x
        .matmul(params.get(&format!("{name}.wx")))?
        .add(&h.matmul(params.get(&format!("{name}.wh")))?)?
        .add(params.get(&format!("{name}.b")))?;
    let gate = |k: usize| z.slice(1, k * hidden, hidden);
    let i = gate(0)?.sigmoid();
    let f = gate(1)?.sigmoid();
    let g = gate(2)?.tanh();
    let o = gate(3)?.sigmoid();
    let c = f.mul(c)?.add(&i.mul(&g)?)?;
    let h = o.mul(&c.tanh())?;
    Ok((h, c))
}

fn run_lstm(steps: &[Tensor], params: &ModelParams, name: &str, hidden: usize) -> Result<Tensor> {
    let n = steps[0].shape()[0];
    let mut h = Tensor::zeros(&[n, hidden]);
    let mut c = Tensor::zeros(&[n, hidden]);
    for x in steps {
        (h, c) = lstm_step(x, &h, &c, params, name, hidden)?;
    }
    Ok(h)
}

/// Temporal code `[N, 2 * hidden]` from the `2T` window slots around the target year.
pub fn encode_temporal(
    values: &Tensor,
    mask: &Tensor,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<Tensor> {
    let w = values.shape()[1];
    match config.arch.temporal {
        TemporalEncoder::BiLstm => {
            let steps = (0..w)
                .map(|k| Tensor::concat(&[&values.slice(1, k, 1)?, &mask.slice(1, k, 1)?], 1))
                .collect::<tensorad::Result<Vec<_>>>()?;
            let fwd = run_lstm(&steps, params, "lstm_fwd", config.hidden)?;
            let rev: Vec<Tensor> = steps.into_iter().rev().collect();
            let bwd = run_lstm(&rev, params, "lstm_bwd", config.hidden)?;
            Ok(Tensor::concat(&[&fwd, &bwd], 1)?)
        }
        TemporalEncoder::Mlp => {
            let x = Tensor::concat(&[values, mask], 1)?;
            let h = dense(&x, params, "temporal.0")?.tanh();
            Ok(dense(&h, params, "temporal.1")?.tanh())
        }
        TemporalEncoder::Off => Ok(Tensor::zeros(&[values.shape()[0], 0])),
    }
}

/// Two tanh layers over the geographic and environmental features.
pub fn encode_factors(x: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let h = dense(x, params, "factor.0")?.tanh();
    Ok(dense(&h, params, "factor.1")?.tanh())
}

/// Per-node zoning parameters `(Z_alpha [N, d, d], Z_beta [N, d])` from the context features.
pub fn hyper_zone(xi: &Tensor, params: &ModelParams, zone_dim: usize) -> Result<(Tensor, Tensor)> {
    let n = xi.shape()[0];
    let a = dense(&dense(xi, params, "hyper_alpha.0")?.tanh(), params, "hyper_alpha.1")?;
    let b = dense(&dense(xi, params, "hyper_beta.0")?.tanh(), params, "hyper_beta.1")?;
    Ok((a.reshape(&[n, zone_dim, zone_dim])?, b))
}

/// `h~_n = Z_alpha_n^T h_n + Z_beta_n` for every row.
pub fn zone_scale(h: &Tensor, alpha: &Tensor, beta: &Tensor) -> Result<Tensor> {
    let (n, d) = (h.shape()[0], h.shape()[1]);
    let prod = h.reshape(&[n, d, 1])?.mul(alpha)?;
    Ok(prod.sum_axis(1)?.reshape(&[n, d])?.add(beta)?)
}

/// Edge gates `gamma_mn` in (0, 1) from the normalised edge features.
pub fn edge_gates(edge_features: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let h = dense(edge_features, params, "edge.0")?.tanh();
    Ok(dense(&h, params, "edge.1")?.sigmoid())
}

/// Gated mean of `W h~_m` over incoming edges, then tanh.
pub fn message_pass(
    h_tilde: &Tensor,
    gamma: &Tensor,
    src: &Arc<Vec<usize>>,
    dst: &Arc<Vec<usize>>,
    inv_degree: &Tensor,
    weight: &Tensor,
) -> Result<Tensor> {
    let n = h_tilde.shape()[0];
    let msg = h_tilde.matmul(weight)?.gather_rows(src)?.mul(gamma)?;
    Ok(msg.scatter_add_rows(dst, n)?.mul(inv_degree)?.tanh())
}

/// Two-layer head with a linear normalised output.
pub fn readout(h: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let r = dense(h, params, "readout.0")?.tanh();
    dense(&r, params, "readout.1")
}

/// µmol/kg from a normalised prediction, clamped to the valid oxygen range.
pub fn to_oxygen(normalised: f64, norm: &Normalization) -> f64 {
    norm.oxygen.inverse(normalised).clamp(DO_MIN, DO_MAX)
}

pub struct ForwardOutput {
    /// Normalised predictions for the batch targets, `[B, 1]`.
    pub prediction: Tensor,
    /// Nitrate and phosphate input columns `[N, 1]`; tape leaves when a tape was given.
    pub nitrate: Tensor,
    pub phosphate: Tensor,
    pub zones: Option<(Tensor, Tensor)>,
}

fn factor_input(batch: &BatchFeatures, config: &ModelConfig, tape: Option<&Tape>) -> Result<(Tensor, Tensor, Option<Tensor>)> {
    let env = &batch.env_values;
    let col = |c: usize| env.slice(1, c, 1);
    let (nitrate, phosphate) = match tape {
        Some(t) => (t.var(&col(NITRATE_COL)?), t.var(&col(PHOSPHATE_COL)?)),
        None => (col(NITRATE_COL)?, col(PHOSPHATE_COL)?),
    };
    let mut parts: Vec<Tensor> = Vec::new();
    if config.arch.geo {
        parts.push(batch.geo.clone());
    }
    if config.arch.env {
        parts.push(env.slice(1, 0, 2)?);
        parts.push(nitrate.clone());
        parts.push(phosphate.clone());
        parts.push(env.slice(1, 4, 2)?);
        parts.push(batch.env_mask.clone());
    }
    let x = if parts.is_empty() {
        None
    } else {
        let refs: Vec<&Tensor> = parts.iter().collect();
        Some(Tensor::concat(&refs, 1)?)
    };
    Ok((nitrate, phosphate, x))
}

/// Runs the model on a subgraph batch. With a tape, the nutrient columns become leaves
/// so callers can differentiate predictions with respect to them.
pub fn forward(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &BatchFeatures,
    tape: Option<&Tape>,
) -> Result<ForwardOutput> {
    let (nitrate, phosphate, factor_x) = factor_input(batch, config, tape)?;
    let mut latent: Vec<Tensor> = Vec::new();
    if config.arch.temporal != TemporalEncoder::Off {
        latent.push(encode_temporal(&batch.window_values, &batch.window_mask, params, config)?);
    }
    if let Some(x) = factor_x {
        latent.push(encode_factors(&x, params)?);
    }
    let refs: Vec<&Tensor> = latent.iter().collect();
    let mut h = dense(&Tensor::concat(&refs, 1)?, params, "project")?.tanh();

    let mut zones = None;
    if config.layers() > 0 {
        let gamma = edge_gates(&batch.edge_features, params)?;
        if config.uses_zoning() {
            zones = Some(hyper_zone(&batch.xi, params, config.zone_dim)?);
        }
        for l in 0..config.layers() {
            let h_tilde = match &zones {
                Some((a, b)) => zone_scale(&h, a, b)?,
                None => h.clone(),
            };
            let w = params.get(&format!("message.{l}.w"));
            let le = &batch.layer_edges[l];
            let g = gamma.gather_rows(&le.edges)?;
            h = message_pass(&h_tilde, &g, &le.src, &le.dst, &batch.inv_degree, w)?;
        }
    }
    let prediction = readout(&h.gather_rows(&batch.targets)?, params)?;
    Ok(ForwardOutput {
        prediction,
        nitrate,
        phosphate,
        zones,
    })
}

/// Inference: predictions in µmol/kg for the batch targets.
pub fn predict(params: &ModelParams, config: &ModelConfig, batch: &BatchFeatures, norm: &Normalization) -> Result<Vec<f64>> {
    let out = forward(params, config, batch, None)?;
    Ok(out.prediction.data().iter().map(|&z| to_oxygen(z, norm)).collect())
}
