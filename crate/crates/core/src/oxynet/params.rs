use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{Tape, Tensor};

use super::config::{ModelConfig, TemporalEncoder};
use super::features::{ENV_WIDTH, GEO_WIDTH, XI_WIDTH};
use crate::oceangraph::EDGE_FEATURES;
use crate::error::{OxyError, Result};

/// Named learnable tensors in a fixed order.
#[derive(Clone, Debug, Default)]
pub struct ModelParams {
    names: Vec<String>,
    values: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

impl ModelParams {
    pub fn from_named(named: Vec<(String, Tensor)>) -> Self {
        let mut p = ModelParams::default();
        for (n, t) in named {
            p.push(&n, t);
        }
        p
    }

    fn push(&mut self, name: &str, value: Tensor) {
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.values.push(value);
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.values[self.index[name]]
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&k| &self.values[k])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    /// Copy whose tensors are leaves on `tape`.
    pub fn track(&self, tape: &Tape) -> ModelParams {
        self.map(|t| tape.var(t))
    }

    pub fn detach(&self) -> ModelParams {
        self.map(Tensor::detach)
    }

    pub fn map(&self, f: impl Fn(&Tensor) -> Tensor) -> ModelParams {
        ModelParams {
            names: self.names.clone(),
            values: self.values.iter().map(f).collect(),
            index: self.index.clone(),
        }
    }

    pub fn with_values(&self, values: Vec<Tensor>) -> Result<ModelParams> {
        if values.len() != self.values.len()
            || values.iter().zip(&self.values).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(OxyError::Config("parameter shapes do not match".into()));
        }
        Ok(ModelParams {
            names: self.names.clone(),
            values,
            index: self.index.clone(),
        })
    }

    pub fn replace(&mut self, name: &str, value: Tensor) {
        let k = self.index[name];
        self.values[k] = value;
    }

    pub fn named(&self) -> Vec<(String, Tensor)> {
        self.names.iter().cloned().zip(self.values.iter().cloned()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|t| t.data().iter().all(|v| v.is_finite()))
    }

    /// Checks that names and shapes agree with a freshly initialised set for `config`.
    pub fn check_layout(&self, config: &ModelConfig) -> Result<()> {
        let reference = init_params(config);
        let same = reference.names == self.names
            && reference.values.iter().zip(&self.values).all(|(a, b)| a.shape() == b.shape());
        if !same {
            return Err(OxyError::Config("checkpoint does not match the model configuration".into()));
        }
        Ok(())
    }
}

struct Init {
    rng: ChaCha8Rng,
    params: ModelParams,
}

impl Init {
    fn xavier(&mut self, name: &str, fan_in: usize, fan_out: usize) {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| self.rng.random_range(-a..a)).collect();
        self.params
            .push(name, Tensor::new(&[fan_in, fan_out], data).expect("sized buffer"));
    }

    fn constant(&mut self, name: &str, shape: &[usize], v: f64) {
        self.params.push(name, Tensor::full(shape, v));
    }

    fn dense(&mut self, name: &str, fan_in: usize, fan_out: usize) {
        self.xavier(&format!("{name}.w"), fan_in, fan_out);
        self.constant(&format!("{name}.b"), &[1, fan_out], 0.0);
    }

    fn lstm(&mut self, name: &str, input: usize, hidden: usize) {
        self.xavier(&format!("{name}.wx"), input, 4 * hidden);
        self.xavier(&format!("{name}.wh"), hidden, 4 * hidden);
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
        self.params
            .push(&format!("{name}.b"), Tensor::new(&[1, 4 * hidden], bias).expect("sized"));
    }
}

/// Input width of the projection to the message-passing space.
pub fn latent_width(config: &ModelConfig) -> usize {
    let a = &config.arch;
    let temporal = if a.temporal == TemporalEncoder::Off { 0 } else { 2 * config.hidden };
    let factors = if a.env || a.geo { config.hidden } else { 0 };
    temporal + factors
}

pub fn factor_input_width(config: &ModelConfig) -> usize {
    (if config.arch.geo { GEO_WIDTH } else { 0 }) + (if config.arch.env { ENV_WIDTH } else { 0 })
}

/// Seeded initial parameters.
///
/// Hypernetwork output layers start with zero weights and identity bias,
/// so every node begins with `Z_alpha = I`, `Z_beta = 0`.
pub fn init_params(config: &ModelConfig) -> ModelParams {
    let mut init = Init {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        params: ModelParams::default(),
    };
    let (h, z, w) = (config.hidden, config.zone_dim, 2 * config.half_window);
    match config.arch.temporal {
        TemporalEncoder::BiLstm => {
            init.lstm("lstm_fwd", 2, h);
            init.lstm("lstm_bwd", 2, h);
        }
        TemporalEncoder::Mlp => {
            init.dense("temporal.0", 2 * w, 2 * h);
            init.dense("temporal.1", 2 * h, 2 * h);
        }
        TemporalEncoder::Off => {}
    }
    if config.arch.env || config.arch.geo {
        init.dense("factor.0", factor_input_width(config), h);
        init.dense("factor.1", h, h);
    }
    init.dense("project", latent_width(config), z);
    if config.layers() > 0 {
        init.dense("edge.0", EDGE_FEATURES, config.edge_hidden);
        init.dense("edge.1", config.edge_hidden, 1);
        for l in 0..config.layers() {
            init.xavier(&format!("message.{l}.w"), z, z);
        }
    }
    if config.uses_zoning() {
        init.dense("hyper_alpha.0", XI_WIDTH, config.hyper_hidden);
        init.constant("hyper_alpha.1.w", &[config.hyper_hidden, z * z], 0.0);
        let eye = Tensor::eye(z).reshape(&[1, z * z]).expect("square");
        init.params.push("hyper_alpha.1.b", eye);
        init.dense("hyper_beta.0", XI_WIDTH, config.hyper_hidden);
        init.constant("hyper_beta.1.w", &[config.hyper_hidden, z], 0.0);
        init.constant("hyper_beta.1.b", &[1, z], 0.0);
    }
    init.dense("readout.0", z, config.readout_hidden);
    init.dense("readout.1", config.readout_hidden, 1);
    init.params
}
