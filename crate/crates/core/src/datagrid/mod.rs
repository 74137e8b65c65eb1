//! Observation records, quality control, and the 4D grid.

pub mod areas;
pub mod bathymetry;
pub mod derived;
pub mod flags;
pub mod geo;
pub mod grid;
pub mod io;
pub mod qc;
pub mod types;

pub use areas::{Area, AreaTable};
pub use bathymetry::Bathymetry;
pub use derived::compute_derived;
pub use flags::harmonize_flag;
pub use geo::{great_circle_km, to_spherical};
pub use grid::{grid_records, nearest_level, Dims, Grid4D, GridConfig, GridSummary, NA, STANDARD_DEPTHS};
pub use qc::{filter_records, validate_record, QcConfig, QcReport, RejectReason, Verdict};
pub use types::{FlagClass, Record, SourceDb, Variable};
