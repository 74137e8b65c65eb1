use serde::{Deserialize, Serialize};

use crate::error::{OxyError, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalEncoder {
    BiLstm,
    Mlp,
    Off,
}

/// Which channels and stages the model uses; presets assemble the baselines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Architecture {
    pub temporal: TemporalEncoder,
    pub env: bool,
    pub geo: bool,
    pub graph: bool,
    pub zoning: bool,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            temporal: TemporalEncoder::BiLstm,
            env: true,
            geo: true,
            graph: true,
            zoning: true,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Full,
    MlpAll,
    MlpTime,
    MlpEnv,
    VanillaGnn,
    BilstmOnly,
}

impl Preset {
    pub const BASELINES: [Preset; 5] = [
        Preset::MlpAll,
        Preset::MlpTime,
        Preset::MlpEnv,
        Preset::VanillaGnn,
        Preset::BilstmOnly,
    ];

    pub fn architecture(self) -> Architecture {
        let off = Architecture {
            temporal: TemporalEncoder::Off,
            env: false,
            geo: false,
            graph: false,
            zoning: false,
        };
        match self {
            Preset::Full => Architecture::default(),
            Preset::MlpAll => Architecture {
                temporal: TemporalEncoder::Mlp,
                env: true,
                geo: true,
                ..off
            },
            Preset::MlpTime => Architecture {
                temporal: TemporalEncoder::Mlp,
                ..off
            },
            Preset::MlpEnv => Architecture {
                env: true,
                geo: true,
                ..off
            },
            Preset::VanillaGnn => Architecture {
                zoning: false,
                ..Architecture::default()
            },
            Preset::BilstmOnly => Architecture {
                temporal: TemporalEncoder::BiLstm,
                ..off
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Full => "full",
            Preset::MlpAll => "mlp_all",
            Preset::MlpTime => "mlp_time",
            Preset::MlpEnv => "mlp_env",
            Preset::VanillaGnn => "vanilla_gnn",
            Preset::BilstmOnly => "bilstm_only",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = OxyError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| OxyError::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Years on each side of the target year fed to the temporal encoder.
    pub half_window: usize,
    pub hidden: usize,
    pub zone_dim: usize,
    pub n_layers: usize,
    pub hyper_hidden: usize,
    pub edge_hidden: usize,
    pub readout_hidden: usize,
    pub arch: Architecture,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            half_window: 2,
            hidden: 8,
            zone_dim: 8,
            n_layers: 2,
            hyper_hidden: 8,
            edge_hidden: 8,
            readout_hidden: 8,
            arch: Architecture::default(),
            seed: 17,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.half_window,
            self.hidden,
            self.zone_dim,
            self.hyper_hidden,
            self.edge_hidden,
            self.readout_hidden,
        ];
        if sizes.contains(&0) {
            return Err(OxyError::Config("model sizes must be positive".into()));
        }
        let a = &self.arch;
        if a.temporal == TemporalEncoder::Off && !a.env && !a.geo {
            return Err(OxyError::Config("model has no input channels".into()));
        }
        Ok(())
    }

    /// Message-passing rounds actually run.
    pub fn layers(&self) -> usize {
        if self.arch.graph {
            self.n_layers
        } else {
            0
        }
    }

    pub fn uses_zoning(&self) -> bool {
        self.arch.zoning && self.layers() > 0
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.arch = preset.architecture();
        self
    }
}
