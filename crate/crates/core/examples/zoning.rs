//! Cluster the learned zone embeddings into ocean zones.
//!
//! ```bash
//! cargo run -p oxyrecon --example zoning
//! ```

use oxyrecon::evalzone::kmeans;
use oxyrecon::oceangraph::GraphConfig;
use oxyrecon::oxynet::ModelConfig;
use oxyrecon::synthlab::{generate, FieldStyle, SynthConfig};
use oxyrecon::training::{run_fold, zone_embeddings, Dataset, TrainConfig};

const ZONES: usize = 4;

fn main() -> oxyrecon::Result<()> {
    let synth = SynthConfig { dims: [12, 12, 3, 4], field_style: FieldStyle::ZonalBands, missing_rate: 0.7, seed: 2, ..SynthConfig::default() };
    let dataset = Dataset::from_fixture(&generate(&synth)?);
    let config = TrainConfig { epochs: 8, iteration_budget: 40, ..TrainConfig::default() };
    let outcome = run_fold(&dataset, &GraphConfig::default(), &ModelConfig::default(), &config, 4)?;

    let surface = &outcome.prepared.snapshots[0];
    let keys: Vec<_> = surface.nodes.iter().copied().filter(|k| k.d == 0).collect();
    let cells: Vec<usize> = keys.iter().map(|k| k.flat(dataset.observed.dims)).collect();
    let r = &outcome.result;
    let points = zone_embeddings(&outcome.prepared, &r.params, &r.model, &cells)?;
    let zones = kmeans(&keys, &points, ZONES, 1)?;

    let dims = dataset.observed.dims;
    let mut map = vec!['.'; dims.lon * dims.lat];
    for (k, &z) in zones.keys.iter().zip(&zones.zone) {
        map[k.j * dims.lon + k.i] = char::from(b'A' + z as u8);
    }
    println!("surface zones, year 0 (north at top, '.' is land):");
    for j in (0..dims.lat).rev() {
        println!("  {}", map[j * dims.lon..(j + 1) * dims.lon].iter().collect::<String>());
    }
    for z in 0..zones.zone_count() {
        println!("zone {}: {} cells", char::from(b'A' + z as u8), zones.zone.iter().filter(|&&q| q == z).count());
    }
    Ok(())
}
