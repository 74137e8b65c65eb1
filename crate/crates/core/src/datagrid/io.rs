//! On-disk formats: record CSV, grid binary with JSON sidecar, area and bathymetry JSON.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::areas::AreaTable;
use super::bathymetry::Bathymetry;
use super::grid::{Dims, Grid4D, NA};
use super::types::{Record, Variable};
use crate::error::{OxyError, Result};

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = ["source_db", "lon", "lat", "depth", "year", "variable", "value", "flag"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(OxyError::Data(format!("unexpected record header {headers:?}")));
    }
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let r: Record = row?;
        if !r.value.is_finite() {
            return Err(OxyError::Data("record value must be finite".into()));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    pub dims: [usize; 4],
    pub depth_levels: Vec<f64>,
    pub year_origin: i32,
    pub variable: Variable,
    pub na_sentinel: f64,
}

/// `stem.json` and `stem.bin` for a grid stem such as `out/do`.
pub fn grid_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

pub fn encode_grid(grid: &Grid4D) -> Vec<u8> {
    let n = grid.dims.len();
    let mut bytes = Vec::with_capacity(n * 5);
    for (v, &m) in grid.values.iter().zip(&grid.mask) {
        let v = if m { *v as f32 } else { NA as f32 };
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend(grid.mask.iter().map(|&m| m as u8));
    bytes
}

pub fn decode_grid(sidecar: &GridSidecar, bytes: &[u8]) -> Result<Grid4D> {
    let [l, g, d, t] = sidecar.dims;
    let dims = Dims::new(l, g, d, t);
    let n = dims.len();
    if bytes.len() != n * 5 {
        return Err(OxyError::Data(format!("grid blob has {} bytes, expected {}", bytes.len(), n * 5)));
    }
    let (vals, mask) = bytes.split_at(n * 4);
    let mut grid = Grid4D::empty(dims, sidecar.variable, sidecar.depth_levels.clone(), sidecar.year_origin);
    for k in 0..n {
        match mask[k] {
            0 => {}
            1 => {
                let raw: [u8; 4] = vals[k * 4..k * 4 + 4].try_into().expect("4-byte chunk");
                grid.values[k] = f32::from_le_bytes(raw) as f64;
                grid.mask[k] = true;
            }
            other => return Err(OxyError::Data(format!("mask byte {other} at cell {k}"))),
        }
    }
    grid.check()?;
    Ok(grid)
}

pub fn sidecar_of(grid: &Grid4D) -> GridSidecar {
    GridSidecar {
        dims: grid.dims.as_array(),
        depth_levels: grid.depth_levels.clone(),
        year_origin: grid.year_origin,
        variable: grid.variable,
        na_sentinel: NA,
    }
}

pub fn write_grid(stem: &Path, grid: &Grid4D) -> Result<()> {
    grid.check()?;
    let (json, bin) = grid_paths(stem);
    fs::write(json, serde_json::to_vec_pretty(&sidecar_of(grid))?)?;
    fs::File::create(bin)?.write_all(&encode_grid(grid))?;
    Ok(())
}

pub fn read_grid(stem: &Path) -> Result<Grid4D> {
    let (json, bin) = grid_paths(stem);
    let sidecar: GridSidecar = serde_json::from_slice(&fs::read(&json).map_err(|e| missing(&json, e))?)?;
    let mut bytes = Vec::new();
    fs::File::open(&bin)
        .map_err(|e| missing(&bin, e))?
        .read_to_end(&mut bytes)?;
    decode_grid(&sidecar, &bytes)
}

fn missing(path: &Path, e: std::io::Error) -> OxyError {
    OxyError::Data(format!("cannot read {}: {e}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| missing(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_areas(path: &Path) -> Result<AreaTable> {
    let table: AreaTable = read_json(path)?;
    if table.is_empty() {
        return Err(OxyError::Data("area table is empty".into()));
    }
    Ok(table)
}

pub fn read_bathymetry(path: &Path) -> Result<Bathymetry> {
    let b: Bathymetry = read_json(path)?;
    if b.elevation.len() != b.lon_cells * b.lat_cells {
        return Err(OxyError::Data("bathymetry size does not match its cell counts".into()));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_through_f32() {
        let dims = Dims::new(3, 2, 2, 2);
        let mut g = Grid4D::empty(dims, Variable::Oxygen, vec![0.0, 10.0], 1990);
        g.set(1, 1, 0, 1, 212.5);
        g.set(2, 0, 1, 0, 7.25);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("do");
        write_grid(&stem, &g).unwrap();
        assert_eq!(read_grid(&stem).unwrap(), g);
    }

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let r = Record {
            source_db: super::super::types::SourceDb::Idp,
            lon: -20.5,
            lat: 33.0,
            depth: 12.0,
            year: 2004,
            variable: Variable::Nitrate,
            value: 14.5,
            raw_flag: "A".into(),
        };
        write_records(&path, std::slice::from_ref(&r)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("source_db,lon,lat,depth,year,variable,value,flag\n"));
        assert_eq!(read_records(&path).unwrap(), vec![r]);
    }
}
