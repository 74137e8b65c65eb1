use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use super::masks::{cell_rng, STREAM_NOISE};
use super::{FieldStyle, SynthConfig};
use crate::datagrid::{Grid4D, Variable};

/// Oxygen consumed per unit of nitrate released (138 / 16).
pub const DO_PER_NITRATE: f64 = 138.0 / 16.0;
/// Oxygen consumed per unit of phosphate released.
pub const DO_PER_PHOSPHATE: f64 = 138.0;

pub fn nitrate_from_oxygen(a_n: f64, oxygen: f64, noise: f64) -> f64 {
    (a_n - oxygen + noise) / DO_PER_NITRATE
}

pub fn phosphate_from_oxygen(a_p: f64, oxygen: f64, noise: f64) -> f64 {
    (a_p - oxygen + noise) / DO_PER_PHOSPHATE
}

pub(super) struct Truths {
    pub oxygen: Grid4D,
    pub factors: Vec<Grid4D>,
}

struct Point {
    u: f64,
    lat: f64,
    w: f64,
    s: f64,
}

fn harmonic(p: &Point) -> f64 {
    250.0 + 70.0 * (TAU * p.u + 0.5).sin() * p.lat.cos() + 40.0 * (TAU * p.u + 2.0 * p.lat).cos() * p.lat.cos()
        - 60.0 * p.w
        + 20.0 * (TAU * (p.s + p.u)).sin()
        - 10.0 * p.s
}

fn oxygen(style: FieldStyle, p: &Point, pocket: bool, pocket_level: bool) -> f64 {
    let v = match style {
        FieldStyle::SmoothHarmonic => harmonic(p),
        FieldStyle::ZonalBands => 240.0 + 110.0 * (3.0 * p.lat).cos() - 50.0 * p.w + 10.0 * (TAU * (p.s + p.u)).sin(),
        FieldStyle::OmzPockets if pocket && pocket_level => 12.0 + 5.0 * (TAU * (p.s + p.u)).sin(),
        FieldStyle::OmzPockets => harmonic(p),
    };
    v.clamp(0.0, 523.0)
}

fn temperature(p: &Point) -> f64 {
    (1.0 + 25.0 * p.lat.cos().powi(2) * (1.0 - p.w).powi(2) + 1.5 * (TAU * (p.s + p.u)).sin() * (1.0 - p.w))
        .clamp(-3.0, 35.0)
}

fn salinity(p: &Point) -> f64 {
    34.6 + 1.2 * (TAU * p.u).sin() * p.lat.cos() * (1.0 - p.w) + 0.3 * (2.0 * p.lat).sin()
}

fn silicate(p: &Point) -> f64 {
    (15.0 + 120.0 * p.w + 20.0 * (TAU * p.u + p.lat).cos() * p.w).clamp(0.0, 250.0)
}

fn chlorophyll(p: &Point) -> f64 {
    ((1.0 - p.w).powi(6) * (1.0 + 0.6 * (TAU * p.u).sin() * p.lat.cos()) * (0.5 + 0.5 * p.lat.sin().abs())).clamp(0.0, 50.0)
}

pub(super) fn truth_fields(config: &SynthConfig, levels: &[f64], land: &[bool], pockets: &[(usize, usize)]) -> Truths {
    let dims = config.dims();
    let pocket_level = dims.depth / 2;
    let mut is_pocket = vec![false; dims.lon * dims.lat];
    for &(i, j) in pockets {
        is_pocket[j * dims.lon + i] = true;
    }
    let empty = |v: Variable| Grid4D::empty(dims, v, levels.to_vec(), config.year_origin);
    let mut oxy = empty(Variable::Oxygen);
    let mut factors: Vec<Grid4D> = Variable::FACTORS.iter().map(|&v| empty(v)).collect();
    let max_depth = levels[levels.len() - 1];
    for k in 0..dims.len() {
        let (i, j, d, t) = dims.unravel(k);
        let col = j * dims.lon + i;
        if land[col] {
            continue;
        }
        let p = Point {
            u: (i as f64 + 0.5) / dims.lon as f64,
            lat: dims.lat_center(j).to_radians(),
            w: levels[d] / max_depth,
            s: t as f64 / (dims.time - 1) as f64,
        };
        let o = oxygen(config.field_style, &p, is_pocket[col], d == pocket_level);
        oxy.values[k] = o;
        oxy.mask[k] = true;
        let mut noise = cell_rng(config.seed, STREAM_NOISE, k as u64);
        let (en, ep): (f64, f64) = (noise.sample(StandardNormal), noise.sample(StandardNormal));
        let vals = [
            temperature(&p),
            salinity(&p),
            nitrate_from_oxygen(config.redfield.a_n, o, config.noise_sd * en).clamp(0.0, 500.0),
            phosphate_from_oxygen(config.redfield.a_p, o, config.noise_sd * ep).clamp(0.0, 5.0),
            silicate(&p),
            chlorophyll(&p),
        ];
        for (g, v) in factors.iter_mut().zip(vals) {
            g.values[k] = v;
            g.mask[k] = true;
        }
    }
    Truths { oxygen: oxy, factors }
}
