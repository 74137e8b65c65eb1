//! Inverse-distance and mean baselines on a held-out fold.
//!
//! ```bash
//! cargo run -p oxyrecon --example baselines
//! ```

use oxyrecon::datagrid::Grid4D;
use oxyrecon::evalzone::{baseline_idw, metrics_pairs, IdwConfig};
use oxyrecon::synthlab::{generate, SynthConfig};
use oxyrecon::training::{fold_split, Dataset};

fn main() -> oxyrecon::Result<()> {
    let dataset = Dataset::from_fixture(&generate(&SynthConfig::default())?);
    let split = fold_split(&dataset, 2, 1, 0.1)?;
    let obs = &dataset.observed;

    let mut visible = Grid4D::empty(obs.dims, obs.variable, obs.depth_levels.clone(), obs.year_origin);
    for &c in &split.train {
        visible.values[c] = obs.values[c];
        visible.mask[c] = true;
    }
    let mean = split.train.iter().map(|&c| obs.values[c]).sum::<f64>() / split.train.len() as f64;
    let score = |pred: &dyn Fn(usize) -> f64| metrics_pairs(&split.test.iter().map(|&c| (obs.values[c], pred(c))).collect::<Vec<_>>());

    println!("{} training cells, {} test cells", split.train.len(), split.test.len());
    let m = score(&|_| mean)?;
    println!("mean {:7.2}: MAPE {:6.2}%  RMSE {:6.2}", mean, m.mape, m.rmse);
    for power in [1.0, 2.0, 3.0] {
        for radius_km in [1000.0, 3000.0] {
            let field = baseline_idw(&visible, Some(&dataset.bathymetry), &IdwConfig { power, radius_km })?;
            let m = score(&|c| field.values[c])?;
            println!("IDW p={power} r={radius_km:>4} km: MAPE {:6.2}%  RMSE {:6.2}", m.mape, m.rmse);
        }
    }
    Ok(())
}
