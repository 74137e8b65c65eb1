//! Harmonise flags, filter raw records and grid the survivors.
//!
//! ```bash
//! cargo run -p oxyrecon --example quality_control
//! ```

use oxyrecon::datagrid::{
    filter_records, grid_records, harmonize_flag, AreaTable, Bathymetry, GridConfig, Record, SourceDb, Variable,
};

fn record(source_db: SourceDb, lon: f64, lat: f64, depth: f64, value: f64, flag: &str) -> Record {
    Record {
        source_db,
        lon,
        lat,
        depth,
        year: 2010,
        variable: Variable::Oxygen,
        value,
        raw_flag: flag.into(),
    }
}

fn main() -> oxyrecon::Result<()> {
    for (db, flag) in [(SourceDb::Wod, "0"), (SourceDb::Cchdo, "2"), (SourceDb::Argo, "3"), (SourceDb::Idp, "Q")] {
        println!("{db:?} flag {flag:>2} -> {:?}", harmonize_flag(db, flag));
    }

    let records = vec![
        record(SourceDb::Wod, -150.5, 10.2, 5.0, 210.0, "0"),
        record(SourceDb::Wod, -150.4, 10.7, 12.0, 214.0, "0"),
        record(SourceDb::Cchdo, -150.1, 10.9, 480.0, 60.0, "2"),
        record(SourceDb::Argo, 20.0, -40.0, 100.0, 250.0, "1"),
        record(SourceDb::Glodap, 20.0, -40.0, 100.0, 900.0, "2"),
        record(SourceDb::Idp, 200.0, 0.0, 10.0, 200.0, "1"),
        record(SourceDb::Wod, 33.0, 60.0, 40.0, 280.0, "3"),
    ];
    let areas = AreaTable::default();
    let (accepted, report) = filter_records(records, &Default::default(), &areas);
    println!("{report:?}");

    let config = GridConfig {
        lon_cells: 36,
        lat_cells: 18,
        depth_levels: vec![0.0, 10.0, 100.0, 500.0],
        year_start: 2010,
        year_end: 2010,
    };
    let bathymetry = Bathymetry::flat(36, 18, -4000.0);
    let (grid, summary) = grid_records(&accepted, Variable::Oxygen, &config, &bathymetry)?;
    println!("{summary:?}");
    for k in grid.observed_indices() {
        let (i, j, d, _) = grid.dims.unravel(k);
        println!("  cell ({i:>2}, {j:>2}) at {:>5} m: {:.1} µmol/kg", grid.depth_levels[d], grid.values[k]);
    }
    Ok(())
}
