//! Seeded synthetic oceans whose oxygen and nutrients obey the Redfield slopes.

mod fields;
mod masks;

use serde::{Deserialize, Serialize};

use crate::datagrid::{AreaTable, Bathymetry, Dims, Grid4D, Variable, STANDARD_DEPTHS};
use crate::error::{OxyError, Result};

pub use fields::{nitrate_from_oxygen, phosphate_from_oxygen, DO_PER_NITRATE, DO_PER_PHOSPHATE};
pub use masks::{cell_rng, observed_view};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldStyle {
    SmoothHarmonic,
    ZonalBands,
    OmzPockets,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    Bernoulli,
    CruiseTrack,
}

/// Oxygen-axis intercepts: `N = (a_n - DO) / 8.625`, `P = (a_p - DO) / 138`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Redfield {
    pub a_n: f64,
    pub a_p: f64,
}

impl Default for Redfield {
    fn default() -> Self {
        Self { a_n: 520.0, a_p: 523.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub dims: [usize; 4],
    pub missing_rate: f64,
    /// Standard deviation of the nutrient noise, in oxygen-equivalent µmol/kg.
    pub noise_sd: f64,
    pub seed: u64,
    pub field_style: FieldStyle,
    pub redfield: Redfield,
    pub mask_mode: MaskMode,
    /// Share of horizontal columns turned into land.
    pub land_fraction: f64,
    /// Share of ocean columns, per latitude row, holding an oxygen minimum pocket.
    pub pocket_fraction: f64,
    pub year_origin: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dims: [20, 20, 4, 10],
            missing_rate: 0.9,
            noise_sd: 2.0,
            seed: 7,
            field_style: FieldStyle::SmoothHarmonic,
            redfield: Redfield::default(),
            mask_mode: MaskMode::Bernoulli,
            land_fraction: 0.0,
            pocket_fraction: 0.25,
            year_origin: 2000,
        }
    }
}

impl SynthConfig {
    pub fn dims(&self) -> Dims {
        let [l, g, d, t] = self.dims;
        Dims::new(l, g, d, t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&n| n < 2) {
            return Err(OxyError::Config("synthetic grids need at least 2 cells per axis".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(OxyError::Config("missing_rate must lie in [0, 1)".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(OxyError::Config("noise_sd must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.land_fraction) || !(0.0..=1.0).contains(&self.pocket_fraction) {
            return Err(OxyError::Config("land and pocket fractions must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// `D` levels spread evenly over the standard 0 to 5500 m list.
    pub fn depth_levels(&self) -> Vec<f64> {
        let d = self.dims[2];
        let last = STANDARD_DEPTHS.len() - 1;
        if d > STANDARD_DEPTHS.len() {
            return (0..d).map(|k| k as f64 * 5500.0 / (d - 1) as f64).collect();
        }
        (0..d)
            .map(|k| STANDARD_DEPTHS[(k * last + (d - 1) / 2) / (d - 1)])
            .collect()
    }
}

/// One generated world: complete truths, observed views, and geography.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthFixture {
    pub config: SynthConfig,
    pub do_truth: Grid4D,
    pub do_observed: Grid4D,
    /// Complete fields of the six factors, in `Variable::FACTORS` order.
    pub factor_truth: Vec<Grid4D>,
    /// Sparse observed views of the same factors.
    pub factor_observed: Vec<Grid4D>,
    pub bathymetry: Bathymetry,
    pub areas: AreaTable,
    /// Columns holding a constructed oxygen minimum pocket.
    pub pocket_columns: Vec<(usize, usize)>,
}

impl SynthFixture {
    pub fn factor(&self, v: Variable) -> Option<&Grid4D> {
        Variable::FACTORS
            .iter()
            .position(|f| *f == v)
            .map(|k| &self.factor_observed[k])
    }

    pub fn factor_truth(&self, v: Variable) -> Option<&Grid4D> {
        Variable::FACTORS
            .iter()
            .position(|f| *f == v)
            .map(|k| &self.factor_truth[k])
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthFixture> {
    config.validate()?;
    let dims = config.dims();
    let levels = config.depth_levels();
    let land = masks::land_columns(config);
    let mut bathymetry = Bathymetry::flat(dims.lon, dims.lat, -6000.0);
    for (col, &is_land) in land.iter().enumerate() {
        if is_land {
            bathymetry.elevation[col] = 100.0;
        }
    }
    let pockets = match config.field_style {
        FieldStyle::OmzPockets => masks::pocket_columns(config, &land),
        _ => Vec::new(),
    };
    let truths = fields::truth_fields(config, &levels, &land, &pockets);
    let ocean: Vec<bool> = (0..dims.len())
        .map(|k| {
            let (i, j, _, _) = dims.unravel(k);
            !land[j * dims.lon + i]
        })
        .collect();

    let do_mask = masks::draw_mask(config, 0, &ocean);
    let do_observed = observed_view(&truths.oxygen, &do_mask)?;
    let mut factor_observed = Vec::with_capacity(6);
    for (s, g) in truths.factors.iter().enumerate() {
        let m = masks::draw_mask(config, 1 + s as u64, &ocean);
        factor_observed.push(observed_view(g, &m)?);
    }
    Ok(SynthFixture {
        config: config.clone(),
        do_truth: truths.oxygen,
        do_observed,
        factor_truth: truths.factors,
        factor_observed,
        bathymetry,
        areas: AreaTable::default(),
        pocket_columns: pockets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_levels_cover_the_standard_range() {
        let c = SynthConfig::default();
        let levels = c.depth_levels();
        assert_eq!(levels.len(), 4);
        assert_eq!(levels[0], 0.0);
        assert_eq!(levels[3], 5500.0);
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
    }
}
