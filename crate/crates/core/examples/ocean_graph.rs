//! Build one year's reconstruction graph and look at its neighbourhoods.
//!
//! ```bash
//! cargo run -p oxyrecon --example ocean_graph -- /tmp/edges.csv
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use oxyrecon::oceangraph::export::write_edges_csv;
use oxyrecon::oceangraph::{build_snapshot, GraphConfig, GraphGrids};
use oxyrecon::synthlab::{generate, SynthConfig};

fn main() -> oxyrecon::Result<()> {
    let fixture = generate(&SynthConfig { land_fraction: 0.15, ..SynthConfig::default() })?;
    let grids = GraphGrids::new(&fixture.do_observed, &fixture.bathymetry)
        .with_physics(&fixture.factor_observed[0], &fixture.factor_observed[1]);
    let config = GraphConfig::default();
    let snapshot = build_snapshot(&grids, &config, 5)?;

    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &snapshot.edges {
        *kinds.entry(e.kind.name()).or_default() += 1;
    }
    let degrees: Vec<usize> = (0..snapshot.node_count()).map(|n| snapshot.in_edges(n).len()).collect();
    println!("{} nodes, {} edges {kinds:?}", snapshot.node_count(), snapshot.edges.len());
    println!(
        "in-degree min {} max {} mean {:.1}",
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap(),
        degrees.iter().sum::<usize>() as f64 / degrees.len() as f64
    );

    let busiest = (0..snapshot.node_count()).max_by_key(|&n| degrees[n]).unwrap();
    println!("node {:?} reads from:", snapshot.nodes[busiest]);
    for e in snapshot.in_edges(busiest).iter().take(6) {
        let f = e.features;
        println!("  {:?} {:>9} {:>7.1} km {:>6.0} m", snapshot.nodes[e.src], e.kind.name(), f[0], f[1]);
    }

    if let Some(path) = std::env::args().nth(1).map(PathBuf::from) {
        write_edges_csv(&path, &snapshot)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
