//! Pressure and density from temperature, salinity, and depth.

use super::grid::Grid4D;
use super::types::Variable;
use crate::error::Result;

pub const RHO0: f64 = 1027.0;
pub const ALPHA: f64 = 2.0e-4;
pub const BETA: f64 = 7.6e-4;
pub const T0: f64 = 10.0;
pub const S0: f64 = 35.0;

/// Linear equation of state, kg/m³.
pub fn density(temperature: f64, salinity: f64) -> f64 {
    RHO0 * (1.0 - ALPHA * (temperature - T0) + BETA * (salinity - S0))
}

/// Density with the reference state standing in for missing inputs.
pub fn density_or_reference(temperature: Option<f64>, salinity: Option<f64>) -> f64 {
    density(temperature.unwrap_or(T0), salinity.unwrap_or(S0))
}

/// Pressure in dbar, taken equal to depth in metres.
pub fn pressure(depth: f64) -> f64 {
    depth
}

/// Complete pressure and density grids on the lattice of `temperature`.
pub fn compute_derived(temperature: &Grid4D, salinity: &Grid4D, depth_levels: &[f64]) -> Result<(Grid4D, Grid4D)> {
    temperature.same_dims(salinity)?;
    let dims = temperature.dims;
    let mut p = Grid4D::empty(dims, Variable::Pressure, depth_levels.to_vec(), temperature.year_origin);
    let mut rho = Grid4D::empty(dims, Variable::Density, depth_levels.to_vec(), temperature.year_origin);
    for k in 0..dims.len() {
        let (_, _, d, _) = dims.unravel(k);
        let t = temperature.mask[k].then(|| temperature.values[k]);
        let s = salinity.mask[k].then(|| salinity.values[k]);
        p.values[k] = pressure(depth_levels[d]);
        p.mask[k] = true;
        rho.values[k] = density_or_reference(t, s);
        rho.mask[k] = true;
    }
    Ok((p, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagrid::grid::Dims;

    #[test]
    fn reference_and_warm_water() {
        assert_eq!(density(T0, S0), 1027.0);
        assert!((density(20.0, 35.0) - 1024.946).abs() < 1e-9);
        assert_eq!(pressure(1000.0), 1000.0);
    }

    #[test]
    fn missing_inputs_fall_back_to_reference() {
        let dims = Dims::new(1, 1, 2, 1);
        let levels = vec![0.0, 1000.0];
        let mut t = Grid4D::empty(dims, Variable::Temperature, levels.clone(), 2000);
        let s = Grid4D::empty(dims, Variable::Salinity, levels.clone(), 2000);
        t.set(0, 0, 1, 0, 20.0);
        let (p, rho) = compute_derived(&t, &s, &levels).unwrap();
        assert_eq!(p.get(0, 0, 1, 0), Some(1000.0));
        assert_eq!(rho.get(0, 0, 0, 0), Some(1027.0));
        assert!((rho.get(0, 0, 1, 0).unwrap() - 1024.946).abs() < 1e-9);
    }
}
