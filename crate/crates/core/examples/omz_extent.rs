//! Yearly area share of oxygen minimum zones, on the truth and on an IDW fill.
//!
//! ```bash
//! cargo run -p oxyrecon --example omz_extent
//! ```

use oxyrecon::evalzone::{baseline_idw, omz_stats, IdwConfig, OMZ_THRESHOLD};
use oxyrecon::synthlab::{generate, FieldStyle, SynthConfig};

fn main() -> oxyrecon::Result<()> {
    let synth = SynthConfig { field_style: FieldStyle::OmzPockets, pocket_fraction: 0.2, ..SynthConfig::default() };
    let f = generate(&synth)?;
    let truth = omz_stats(&f.do_truth, Some(&f.bathymetry), OMZ_THRESHOLD)?;
    let idw = baseline_idw(&f.do_observed, Some(&f.bathymetry), &IdwConfig::default())?;
    let filled = omz_stats(&idw, Some(&f.bathymetry), OMZ_THRESHOLD)?;

    println!("threshold {OMZ_THRESHOLD} µmol/kg");
    println!("year   truth    IDW   columns");
    for (a, b) in truth.years.iter().zip(&filled.years) {
        println!("{}  {:.3}  {:.3}   {}/{}", a.year, a.rho, b.rho, a.omz_columns, a.ocean_columns);
    }
    Ok(())
}
