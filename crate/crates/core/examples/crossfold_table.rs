//! Four-fold benchmark table for the model and both baselines.
//!
//! ```bash
//! cargo run -p oxyrecon --example crossfold_table
//! ```

use oxyrecon::oceangraph::GraphConfig;
use oxyrecon::oxynet::ModelConfig;
use oxyrecon::synthlab::{generate, SynthConfig};
use oxyrecon::training::{crossfold, Dataset, TrainConfig};

fn main() -> oxyrecon::Result<()> {
    let fixture = generate(&SynthConfig { dims: [10, 10, 3, 5], missing_rate: 0.8, seed: 9, ..SynthConfig::default() })?;
    let dataset = Dataset::from_fixture(&fixture);
    let config = TrainConfig { epochs: 4, iteration_budget: 30, ..TrainConfig::default() };
    let (report, _) = crossfold(&dataset, &GraphConfig::default(), &ModelConfig::default(), &config, 10)?;
    for line in report.table1_csv() {
        println!("{line}");
    }
    println!();
    for line in report.folds_csv() {
        println!("{line}");
    }
    Ok(())
}
