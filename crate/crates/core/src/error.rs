use thiserror::Error;

use crate::datagrid::Variable;

#[derive(Debug, Error)]
pub enum OxyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("completeness window half-width must be positive")]
    InvalidWindow,
    #[error("no ocean cells at year index {0}")]
    EmptyGraph(usize),
    #[error("batch has no observed entries")]
    EmptySupervision,
    #[error("validation loss for area {area} is not finite")]
    InvalidLoss { area: usize },
    #[error("fold {0} has no test cells")]
    DegenerateFold(usize),
    #[error("no observed entries to score")]
    NoData,
    #[error("grid dimensions differ: {0:?} vs {1:?}")]
    Dims([usize; 4], [usize; 4]),
    #[error("field has missing ocean cells ({0} of them)")]
    IncompleteField(usize),
    #[error("no {variable:?} observations at depth level {depth} in year index {year}")]
    NoSupport {
        variable: Variable,
        depth: usize,
        year: usize,
    },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Tensor(#[from] tensorad::TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, OxyError>;
