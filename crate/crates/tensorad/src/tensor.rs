use std::fmt;
use std::sync::Arc;

use crate::error::{shape_err, Result, TensorError};
use crate::op::{self, Op, Operand};
use crate::shape::numel;
use crate::tape::{Tape, Tracked};

/// Dense row-major `f64` array, optionally recorded on a [`Tape`].
///
/// Cloning is cheap: the buffer is shared.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Arc<Vec<f64>>,
    pub(crate) node: Option<Tracked>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .field("node", &self.node.as_ref().map(|n| n.id))
            .finish()
    }
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if numel(shape) != data.len() {
            return shape_err("new", format!("{} values for shape {shape:?}", data.len()));
        }
        Ok(Self::untracked(shape.to_vec(), data))
    }

    pub(crate) fn untracked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            shape,
            data: Arc::new(data),
            node: None,
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self::untracked(vec![data.len()], data)
    }

    pub fn scalar(v: f64) -> Self {
        Self::untracked(vec![], vec![v])
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        Self::untracked(shape.to_vec(), vec![v; numel(shape)])
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn eye(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::untracked(vec![n, n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.to_vec()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// First element; the value of a scalar.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.node.is_some()
    }

    pub fn node_id(&self) -> Option<usize> {
        self.node.as_ref().map(|n| n.id)
    }

    pub fn tape(&self) -> Option<&Tape> {
        self.node.as_ref().map(|n| &n.tape)
    }

    /// Same values, cut off from any tape.
    pub fn detach(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: Arc::clone(&self.data),
            node: None,
        }
    }

    pub(crate) fn operand(&self) -> Operand<'_> {
        Operand {
            shape: &self.shape,
            data: &self.data,
        }
    }

    fn apply(op: Op, inputs: &[&Tensor]) -> Result<Tensor> {
        let operands: Vec<Operand> = inputs.iter().map(|t| t.operand()).collect();
        let (shape, data) = op::forward(&op, &operands)?;
        let mut tape: Option<&Tape> = None;
        for t in inputs {
            if let Some(tr) = &t.node {
                match tape {
                    None => tape = Some(&tr.tape),
                    Some(existing) if existing.same(&tr.tape) => {}
                    Some(_) => return Err(TensorError::TapeMismatch),
                }
            }
        }
        let data = Arc::new(data);
        let node = tape.map(|tape| {
            let id = tape.record(op, inputs, &shape, Arc::clone(&data));
            Tracked {
                tape: tape.clone(),
                id,
            }
        });
        Ok(Tensor { shape, data, node })
    }

    fn apply_unary(&self, op: Op) -> Tensor {
        Self::apply(op, &[self]).expect("elementwise unary kernels accept any shape")
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        Self::apply(Op::Add, &[self, other])
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        Self::apply(Op::Sub, &[self, other])
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        Self::apply(Op::Mul, &[self, other])
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        Self::apply(Op::Div, &[self, other])
    }

    pub fn neg(&self) -> Tensor {
        self.apply_unary(Op::Neg)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.apply_unary(Op::Scale(c))
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        self.apply_unary(Op::AddScalar(c))
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        Self::apply(Op::MatMul, &[self, other])
    }

    pub fn transpose(&self) -> Result<Tensor> {
        Self::apply(Op::Transpose, &[self])
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if shape == self.shape.as_slice() {
            return Ok(self.clone());
        }
        Self::apply(Op::Reshape(shape.to_vec()), &[self])
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor> {
        if shape == self.shape.as_slice() {
            return Ok(self.clone());
        }
        Self::apply(Op::BroadcastTo(shape.to_vec()), &[self])
    }

    /// Sums over stretched axes so the result has `shape`; inverse of
    /// [`Tensor::broadcast_to`].
    pub fn sum_to(&self, shape: &[usize]) -> Result<Tensor> {
        if shape == self.shape.as_slice() {
            return Ok(self.clone());
        }
        Self::apply(Op::SumTo(shape.to_vec()), &[self])
    }

    /// Sum of all elements as a rank-0 tensor.
    pub fn sum(&self) -> Tensor {
        self.apply_unary(Op::SumAll)
    }

    /// Sum along `axis`, keeping it with size one.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        Self::apply(Op::SumAxis(axis), &[self])
    }

    pub fn mean(&self) -> Tensor {
        let n = self.numel().max(1) as f64;
        self.sum().scale(1.0 / n)
    }

    pub fn mean_axis(&self, axis: usize) -> Result<Tensor> {
        let n = self.shape.get(axis).copied().unwrap_or(1).max(1) as f64;
        Ok(self.sum_axis(axis)?.scale(1.0 / n))
    }

    /// Population variance over all elements.
    pub fn variance(&self) -> Tensor {
        let centered = self
            .sub(&self.mean())
            .expect("a rank-0 mean broadcasts against any shape");
        centered.square().mean()
    }

    pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        if parts.len() == 1 {
            return Ok(parts[0].clone());
        }
        Self::apply(Op::Concat(axis), parts)
    }

    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        Self::apply(Op::Slice { axis, start, len }, &[self])
    }

    /// Embeds `self` at `start` along `axis` in a zero tensor of extent `total`.
    pub fn pad(&self, axis: usize, start: usize, total: usize) -> Result<Tensor> {
        Self::apply(Op::Pad { axis, start, total }, &[self])
    }

    /// Row selection on a matrix: `out[e] = self[index[e]]`.
    pub fn gather_rows(&self, index: &Arc<Vec<usize>>) -> Result<Tensor> {
        Self::apply(Op::GatherRows(Arc::clone(index)), &[self])
    }

    /// Row accumulation on a matrix: `out[index[e]] += self[e]`, `rows` rows.
    pub fn scatter_add_rows(&self, index: &Arc<Vec<usize>>, rows: usize) -> Result<Tensor> {
        Self::apply(
            Op::ScatterAddRows {
                index: Arc::clone(index),
                rows,
            },
            &[self],
        )
    }

    pub fn tanh(&self) -> Tensor {
        self.apply_unary(Op::Tanh)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.apply_unary(Op::Sigmoid)
    }

    pub fn relu(&self) -> Tensor {
        self.apply_unary(Op::Relu)
    }

    pub fn softplus(&self) -> Tensor {
        self.apply_unary(Op::Softplus)
    }

    pub fn exp(&self) -> Tensor {
        self.apply_unary(Op::Exp)
    }

    pub fn ln(&self) -> Tensor {
        self.apply_unary(Op::Ln)
    }

    pub fn sqrt(&self) -> Tensor {
        self.apply_unary(Op::Sqrt)
    }

    pub fn square(&self) -> Tensor {
        self.apply_unary(Op::Square)
    }

    /// Softmax along the last axis.
    pub fn softmax(&self) -> Result<Tensor> {
        let Some(&width) = self.shape.last() else {
            return Ok(Tensor::ones(&[]));
        };
        let axis = self.shape.len() - 1;
        let rows = self.numel() / width.max(1);
        let mut maxes = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = &self.data[r * width..(r + 1) * width];
            maxes.push(row.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        let mut max_shape = self.shape.clone();
        max_shape[axis] = 1;
        let shift = Tensor::untracked(max_shape, maxes);
        let e = self.sub(&shift)?.exp();
        let z = e.sum_axis(axis)?;
        e.div(&z)
    }
}
