//! Losses, the chemistry penalty, area rebalancing, training, and cross-testing.

pub mod data;
pub mod harness;
pub mod losses;
pub mod schedule;
pub mod trainer;

pub use data::{area_batches, make_batch, prepare, Batch, Dataset, Prepared, Split};
pub use losses::{chem_regularizer, gradient_variance, reconstruction_loss, total_loss, Nutrient};
pub use schedule::{rebalance_areas, AreaSchedule};
pub use trainer::{effective_model, loss_and_grads, train, Ablation, HistoryRow, TrainConfig, TrainResult};
pub use harness::{
    crossfold, fold_partition, fold_split, mean_std, predict_cells, reconstruct, run_fold, validation_split, zone_embeddings,
    CrossfoldReport, FoldOutcome, MeanStd, MethodFolds, FOLDS,
};
