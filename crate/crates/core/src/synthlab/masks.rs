use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MaskMode, SynthConfig};
use crate::datagrid::Grid4D;
use crate::error::Result;

/// Words reserved per cell in a stream; draws stay independent of evaluation order.
const WORDS_PER_CELL: u128 = 16;

/// Generator positioned at `index` inside `stream`, so cells can be drawn in any order.
pub fn cell_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * WORDS_PER_CELL);
    rng
}

pub(super) const STREAM_LAND: u64 = 100;
pub(super) const STREAM_POCKET: u64 = 101;
pub(super) const STREAM_NOISE: u64 = 200;
const STREAM_TRACK: u64 = 300;

fn uniform(seed: u64, stream: u64, index: u64) -> f64 {
    cell_rng(seed, stream, index).random::<f64>()
}

/// Keeps exactly `round(share * n)` of the candidates with the smallest draws.
fn lowest_share(seed: u64, stream: u64, candidates: &[usize], share: f64) -> Vec<usize> {
    let keep = (share * candidates.len() as f64).round() as usize;
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&k| (uniform(seed, stream, k as u64), k))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = scored.into_iter().take(keep).map(|(_, k)| k).collect();
    out.sort_unstable();
    out
}

pub(super) fn land_columns(config: &SynthConfig) -> Vec<bool> {
    let dims = config.dims();
    let cols: Vec<usize> = (0..dims.lon * dims.lat).collect();
    let mut land = vec![false; cols.len()];
    for c in lowest_share(config.seed, STREAM_LAND, &cols, config.land_fraction) {
        land[c] = true;
    }
    land
}

/// A contiguous run of pocket columns in every latitude row, sized to the row's ocean count.
pub(super) fn pocket_columns(config: &SynthConfig, land: &[bool]) -> Vec<(usize, usize)> {
    let dims = config.dims();
    let mut out = Vec::new();
    for j in 0..dims.lat {
        let ocean: Vec<usize> = (0..dims.lon).filter(|&i| !land[j * dims.lon + i]).collect();
        let take = (config.pocket_fraction * ocean.len() as f64).round() as usize;
        if take == 0 {
            continue;
        }
        let start = (uniform(config.seed, STREAM_POCKET, j as u64) * ocean.len() as f64) as usize;
        let mut row: Vec<(usize, usize)> = (0..take)
            .map(|k| (ocean[(start + k) % ocean.len()], j))
            .collect();
        row.sort_unstable();
        out.extend(row);
    }
    out
}

/// Observation mask over ocean cells with exactly `round((1 - missing_rate) * ocean)` hits.
pub(super) fn draw_mask(config: &SynthConfig, stream: u64, ocean: &[bool]) -> Vec<bool> {
    let candidates: Vec<usize> = (0..ocean.len()).filter(|&k| ocean[k]).collect();
    let share = 1.0 - config.missing_rate;
    let mut mask = vec![false; ocean.len()];
    match config.mask_mode {
        MaskMode::Bernoulli => {
            for k in lowest_share(config.seed, stream, &candidates, share) {
                mask[k] = true;
            }
        }
        MaskMode::CruiseTrack => cruise_tracks(config, stream, ocean, share, &mut mask),
    }
    mask
}

/// Straight ship tracks sampling whole water columns, laid year by year until the quota is met.
fn cruise_tracks(config: &SynthConfig, stream: u64, ocean: &[bool], share: f64, mask: &mut [bool]) {
    let dims = config.dims();
    for t in 0..dims.time {
        let cells: Vec<usize> = (0..dims.lon * dims.lat * dims.depth)
            .map(|k| t * dims.lon * dims.lat * dims.depth + k)
            .filter(|&k| ocean[k])
            .collect();
        let quota = (share * cells.len() as f64).round() as usize;
        let mut rng = cell_rng(config.seed, STREAM_TRACK + stream, t as u64);
        let mut hits = 0;
        let mut attempts = 0;
        while hits < quota && attempts < 100_000 {
            attempts += 1;
            let (mut x, mut y) = (rng.random::<f64>() * dims.lon as f64, rng.random::<f64>() * dims.lat as f64);
            let heading = rng.random::<f64>() * std::f64::consts::TAU;
            let (dx, dy) = (heading.cos(), heading.sin());
            for _ in 0..dims.lon.max(dims.lat) {
                let i = (x.floor() as i64).rem_euclid(dims.lon as i64) as usize;
                let j = y.floor() as i64;
                if !(0..dims.lat as i64).contains(&j) {
                    break;
                }
                for d in 0..dims.depth {
                    let k = dims.index(i, j as usize, d, t);
                    if hits < quota && ocean[k] && !mask[k] {
                        mask[k] = true;
                        hits += 1;
                    }
                }
                x += dx;
                y += dy;
            }
        }
        for &k in &cells {
            if hits >= quota {
                break;
            }
            if !mask[k] {
                mask[k] = true;
                hits += 1;
            }
        }
    }
}

/// The observed matrix: truth where the mask is set, the missing marker elsewhere.
pub fn observed_view(truth: &Grid4D, mask: &[bool]) -> Result<Grid4D> {
    if mask.len() != truth.dims.len() {
        return Err(crate::OxyError::Data("mask length does not match grid".into()));
    }
    let mut out = Grid4D::empty(truth.dims, truth.variable, truth.depth_levels.clone(), truth.year_origin);
    for k in 0..mask.len() {
        if mask[k] && truth.mask[k] {
            out.values[k] = truth.values[k];
            out.mask[k] = true;
        }
    }
    Ok(out)
}
