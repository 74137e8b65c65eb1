//! Train on one held-out fold and compare against the classical baselines.
//!
//! ```bash
//! cargo run -p oxyrecon --example train_fold
//! ```

use oxyrecon::oceangraph::GraphConfig;
use oxyrecon::oxynet::ModelConfig;
use oxyrecon::synthlab::{generate, SynthConfig};
use oxyrecon::training::{run_fold, Dataset, TrainConfig};

fn main() -> oxyrecon::Result<()> {
    let fixture = generate(&SynthConfig { dims: [12, 12, 3, 6], missing_rate: 0.8, seed: 5, ..SynthConfig::default() })?;
    let dataset = Dataset::from_fixture(&fixture);
    let model = ModelConfig { seed: 6, ..ModelConfig::default() };
    let config = TrainConfig { epochs: 10, iteration_budget: 40, seed: 7, ..TrainConfig::default() };

    let outcome = run_fold(&dataset, &GraphConfig::default(), &model, &config, 8)?;
    println!("epoch  train_loss  val_loss    grad_N_var");
    for row in outcome.result.epoch_rows() {
        println!("{:>5}  {:>10.4}  {:>8.4}  {:>12.3e}", row.epoch, row.train_loss, row.val_loss, row.grad_n_var);
    }
    println!("best epoch {} of {}", outcome.result.best_epoch, outcome.result.epochs_run);

    for (name, m) in [("model", &outcome.model), ("IDW", &outcome.idw_baseline), ("mean", &outcome.mean_baseline)] {
        println!("{name:>6}: MAPE {:6.2}%  RMSE {:6.2}  R2 {:7.4}  (n {})", m.mape, m.rmse, m.r2, m.n);
    }
    Ok(())
}
