//! Fill every ocean cell with a trained model, then break the test error down.
//!
//! ```bash
//! cargo run -p oxyrecon --example reconstruct_and_evaluate
//! ```

use oxyrecon::evalzone::evaluate_cells;
use oxyrecon::oceangraph::GraphConfig;
use oxyrecon::oxynet::ModelConfig;
use oxyrecon::synthlab::{generate, SynthConfig};
use oxyrecon::training::{reconstruct, run_fold, Dataset, TrainConfig};

fn main() -> oxyrecon::Result<()> {
    let fixture = generate(&SynthConfig { dims: [12, 12, 3, 6], missing_rate: 0.8, seed: 21, ..SynthConfig::default() })?;
    let dataset = Dataset::from_fixture(&fixture);
    let config = TrainConfig { epochs: 8, iteration_budget: 40, ..TrainConfig::default() };
    let outcome = run_fold(&dataset, &GraphConfig::default(), &ModelConfig::default(), &config, 3)?;

    let r = &outcome.result;
    let field = reconstruct(&outcome.prepared, &r.params, &r.model, &r.norm)?;
    println!("reconstructed {} of {} cells", field.observed_count(), field.dims.len());

    let report = evaluate_cells(&field, &dataset.observed, &outcome.split.test, &dataset.areas)?;
    println!("pooled: MAPE {:.2}%  RMSE {:.2}", report.pooled.mape, report.pooled.rmse);
    for (d, m) in &report.by_depth {
        println!("  {:>5} m  MAPE {:6.2}%  (n {})", field.depth_levels[*d], m.mape, m.n);
    }
    for (y, m) in &report.by_year {
        println!("  {y}  MAPE {:6.2}%  (n {})", m.mape, m.n);
    }

    // The synthetic truth is known everywhere, so the gap-filled cells can be scored too.
    let hidden: Vec<usize> = field.observed_indices().into_iter().filter(|&k| !dataset.observed.mask[k]).collect();
    let truth = evaluate_cells(&field, &fixture.do_truth, &hidden, &dataset.areas)?;
    println!("against truth on {} never-observed cells: MAPE {:.2}%", truth.pooled.n, truth.pooled.mape);
    Ok(())
}
