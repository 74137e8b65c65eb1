pub mod cli;
pub mod datagrid;
pub mod error;
pub mod evalzone;
pub mod oceangraph;
pub mod oxynet;
pub mod synthlab;
pub mod training;

pub use error::{OxyError, Result};
