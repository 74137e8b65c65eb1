//! The reconstruction network and its building blocks.

pub mod config;
pub mod features;
pub mod model;
pub mod params;

pub use config::{Architecture, ModelConfig, Preset, TemporalEncoder};
pub use features::{BatchFeatures, LayerEdges, ModelInputs, Normalization, Stats, NITRATE_COL, PHOSPHATE_COL};
pub use model::{forward, predict, to_oxygen, ForwardOutput};
pub use params::{init_params, ModelParams};
