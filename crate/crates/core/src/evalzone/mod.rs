//! Metrics, OMZ statistics, external-field scoring, zoning extraction, and baselines.

pub mod idw;
pub mod metrics;
pub mod omz;
pub mod zones;

pub use idw::{baseline_idw, idw_value, IdwConfig};
pub use metrics::{evaluate_cells, evaluate_external_field, metrics, metrics_pairs, FieldReport, MetricsReport};
pub use omz::{omz_stats, OmzReport, OmzYear, OMZ_THRESHOLD};
pub use zones::{kmeans, zone_points, ZoneAssignment};
