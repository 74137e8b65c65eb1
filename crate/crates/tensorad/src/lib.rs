//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! Operations on tensors that descend from a [`Tape::var`] leaf are recorded;
//! [`grad`] walks the record backwards. Every backward rule is itself
//! expressed with recorded operations, so passing `create_graph = true`
//! yields gradients that can be differentiated again.
//!
//! ```
//! use tensorad::{grad, Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.var(&Tensor::scalar(2.0));
//! let y = x.square().mul(&x).unwrap(); // x^3
//! let dy = grad(&y, &[&x], true).unwrap().remove(0);
//! let d2y = grad(&dy, &[&x], false).unwrap().remove(0);
//! assert!((dy.item() - 12.0).abs() < 1e-12);
//! assert!((d2y.item() - 12.0).abs() < 1e-12);
//! ```

mod backward;
pub mod checkpoint;
mod error;
mod op;
pub mod shape;
mod tape;
mod tensor;

pub use error::{Result, TensorError};
pub use tape::{grad, Tape};
pub use tensor::Tensor;
