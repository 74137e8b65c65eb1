//! Primitive operations and their forward kernels.

use std::sync::Arc;

use crate::error::{shape_err, Result};
use crate::shape::{
    broadcast_shapes, broadcast_strides, broadcastable_to, contiguous_strides, for_each_offset,
    numel, split_at_axis,
};

#[derive(Clone, Debug)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f64),
    AddScalar(f64),
    MatMul,
    Transpose,
    Reshape(Vec<usize>),
    BroadcastTo(Vec<usize>),
    SumTo(Vec<usize>),
    SumAll,
    SumAxis(usize),
    Concat(usize),
    Slice { axis: usize, start: usize, len: usize },
    Pad { axis: usize, start: usize, total: usize },
    GatherRows(Arc<Vec<usize>>),
    ScatterAddRows { index: Arc<Vec<usize>>, rows: usize },
    Tanh,
    Sigmoid,
    Relu,
    Softplus,
    Exp,
    Ln,
    Sqrt,
    Square,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::MatMul => "matmul",
            Op::Transpose => "transpose",
            Op::Reshape(_) => "reshape",
            Op::BroadcastTo(_) => "broadcast_to",
            Op::SumTo(_) => "sum_to",
            Op::SumAll => "sum",
            Op::SumAxis(_) => "sum_axis",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::Pad { .. } => "pad",
            Op::GatherRows(_) => "gather_rows",
            Op::ScatterAddRows { .. } => "scatter_add_rows",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::Relu => "relu",
            Op::Softplus => "softplus",
            Op::Exp => "exp",
            Op::Ln => "ln",
            Op::Sqrt => "sqrt",
            Op::Square => "square",
        }
    }
}

/// Borrowed operand: shape plus row-major data.
#[derive(Clone, Copy)]
pub struct Operand<'a> {
    pub shape: &'a [usize],
    pub data: &'a [f64],
}

pub type Computed = (Vec<usize>, Vec<f64>);

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.max(0.0) + (-x.abs()).exp().ln_1p()
    }
}

fn binary(name: &'static str, a: Operand, b: Operand, f: impl Fn(f64, f64) -> f64) -> Result<Computed> {
    if a.shape == b.shape {
        let data = a.data.iter().zip(b.data).map(|(&x, &y)| f(x, y)).collect();
        return Ok((a.shape.to_vec(), data));
    }
    let Some(out) = broadcast_shapes(a.shape, b.shape) else {
        return shape_err(name, format!("{:?} vs {:?}", a.shape, b.shape));
    };
    let sa = broadcast_strides(a.shape, &out);
    let sb = broadcast_strides(b.shape, &out);
    let mut data = Vec::with_capacity(numel(&out));
    for_each_offset(&out, [&sa, &sb], |[ia, ib]| data.push(f(a.data[ia], b.data[ib])));
    Ok((out, data))
}

fn unary(a: Operand, f: impl Fn(f64) -> f64) -> Computed {
    (a.shape.to_vec(), a.data.iter().map(|&x| f(x)).collect())
}

pub fn broadcast_to(a: Operand, target: &[usize]) -> Result<Computed> {
    if !broadcastable_to(a.shape, target) {
        return shape_err("broadcast_to", format!("{:?} -> {:?}", a.shape, target));
    }
    if a.shape == target {
        return Ok((target.to_vec(), a.data.to_vec()));
    }
    let sa = broadcast_strides(a.shape, target);
    let mut data = Vec::with_capacity(numel(target));
    for_each_offset(target, [&sa], |[ia]| data.push(a.data[ia]));
    Ok((target.to_vec(), data))
}

pub fn sum_to(a: Operand, target: &[usize]) -> Result<Computed> {
    if !broadcastable_to(target, a.shape) {
        return shape_err("sum_to", format!("{:?} -> {:?}", a.shape, target));
    }
    if a.shape == target {
        return Ok((target.to_vec(), a.data.to_vec()));
    }
    let st = broadcast_strides(target, a.shape);
    let own = contiguous_strides(a.shape);
    let mut data = vec![0.0; numel(target)];
    for_each_offset(a.shape, [&own, &st], |[ia, it]| data[it] += a.data[ia]);
    Ok((target.to_vec(), data))
}

fn matmul(a: Operand, b: Operand) -> Result<Computed> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return shape_err("matmul", format!("{:?} x {:?}", a.shape, b.shape));
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a.data[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Ok((vec![m, n], out))
}

fn transpose(a: Operand) -> Result<Computed> {
    if a.shape.len() != 2 {
        return shape_err("transpose", format!("rank {} input", a.shape.len()));
    }
    let (m, n) = (a.shape[0], a.shape[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data[i * n + j];
        }
    }
    Ok((vec![n, m], out))
}

fn sum_axis(a: Operand, axis: usize) -> Result<Computed> {
    if axis >= a.shape.len() {
        return shape_err("sum_axis", format!("axis {axis} of {:?}", a.shape));
    }
    let (outer, len, inner) = split_at_axis(a.shape, axis);
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        for l in 0..len {
            let src = &a.data[(o * len + l) * inner..(o * len + l + 1) * inner];
            for (dst, &v) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                *dst += v;
            }
        }
    }
    let mut shape = a.shape.to_vec();
    shape[axis] = 1;
    Ok((shape, out))
}

fn concat(parts: &[Operand], axis: usize) -> Result<Computed> {
    let Some(first) = parts.first() else {
        return shape_err("concat", "no operands");
    };
    if axis >= first.shape.len() {
        return shape_err("concat", format!("axis {axis} of {:?}", first.shape));
    }
    let mut total = 0;
    for p in parts {
        let same_rank = p.shape.len() == first.shape.len();
        let others_match = same_rank
            && p.shape
                .iter()
                .zip(first.shape)
                .enumerate()
                .all(|(k, (x, y))| k == axis || x == y);
        if !others_match {
            return shape_err("concat", format!("{:?} vs {:?}", p.shape, first.shape));
        }
        total += p.shape[axis];
    }
    let (outer, _, inner) = split_at_axis(first.shape, axis);
    let mut out = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for p in parts {
            let chunk = p.shape[axis] * inner;
            out.extend_from_slice(&p.data[o * chunk..(o + 1) * chunk]);
        }
    }
    let mut shape = first.shape.to_vec();
    shape[axis] = total;
    Ok((shape, out))
}

fn slice(a: Operand, axis: usize, start: usize, len: usize) -> Result<Computed> {
    if axis >= a.shape.len() || start + len > a.shape[axis] {
        return shape_err("slice", format!("[{start}, {}) on axis {axis} of {:?}", start + len, a.shape));
    }
    let (outer, full, inner) = split_at_axis(a.shape, axis);
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * full + start) * inner;
        out.extend_from_slice(&a.data[base..base + len * inner]);
    }
    let mut shape = a.shape.to_vec();
    shape[axis] = len;
    Ok((shape, out))
}

fn pad(a: Operand, axis: usize, start: usize, total: usize) -> Result<Computed> {
    if axis >= a.shape.len() || start + a.shape[axis] > total {
        return shape_err("pad", format!("{:?} into {total} at {start}", a.shape));
    }
    let (outer, len, inner) = split_at_axis(a.shape, axis);
    let mut out = vec![0.0; outer * total * inner];
    for o in 0..outer {
        let dst = (o * total + start) * inner;
        out[dst..dst + len * inner].copy_from_slice(&a.data[o * len * inner..(o + 1) * len * inner]);
    }
    let mut shape = a.shape.to_vec();
    shape[axis] = total;
    Ok((shape, out))
}

fn gather_rows(a: Operand, index: &[usize]) -> Result<Computed> {
    if a.shape.len() != 2 {
        return shape_err("gather_rows", format!("rank {} input", a.shape.len()));
    }
    let (rows, cols) = (a.shape[0], a.shape[1]);
    let mut out = Vec::with_capacity(index.len() * cols);
    for &r in index {
        if r >= rows {
            return shape_err("gather_rows", format!("row {r} of {rows}"));
        }
        out.extend_from_slice(&a.data[r * cols..(r + 1) * cols]);
    }
    Ok((vec![index.len(), cols], out))
}

fn scatter_add_rows(a: Operand, index: &[usize], rows: usize) -> Result<Computed> {
    if a.shape.len() != 2 || a.shape[0] != index.len() {
        return shape_err("scatter_add_rows", format!("{:?} with {} indices", a.shape, index.len()));
    }
    let cols = a.shape[1];
    let mut out = vec![0.0; rows * cols];
    for (src, &r) in index.iter().enumerate() {
        if r >= rows {
            return shape_err("scatter_add_rows", format!("row {r} of {rows}"));
        }
        for c in 0..cols {
            out[r * cols + c] += a.data[src * cols + c];
        }
    }
    Ok((vec![rows, cols], out))
}

/// Evaluates `op` on its operands.
pub fn forward(op: &Op, inputs: &[Operand]) -> Result<Computed> {
    let a = || inputs[0];
    let b = || inputs[1];
    match op {
        Op::Leaf => shape_err("leaf", "leaves carry their own values"),
        Op::Add => binary("add", a(), b(), |x, y| x + y),
        Op::Sub => binary("sub", a(), b(), |x, y| x - y),
        Op::Mul => binary("mul", a(), b(), |x, y| x * y),
        Op::Div => binary("div", a(), b(), |x, y| x / y),
        Op::Neg => Ok(unary(a(), |x| -x)),
        Op::Scale(c) => Ok(unary(a(), |x| x * c)),
        Op::AddScalar(c) => Ok(unary(a(), |x| x + c)),
        Op::MatMul => matmul(a(), b()),
        Op::Transpose => transpose(a()),
        Op::Reshape(shape) => {
            if numel(shape) != a().data.len() {
                return shape_err("reshape", format!("{:?} -> {:?}", a().shape, shape));
            }
            Ok((shape.clone(), a().data.to_vec()))
        }
        Op::BroadcastTo(shape) => broadcast_to(a(), shape),
        Op::SumTo(shape) => sum_to(a(), shape),
        Op::SumAll => Ok((vec![], vec![a().data.iter().sum()])),
        Op::SumAxis(axis) => sum_axis(a(), *axis),
        Op::Concat(axis) => concat(inputs, *axis),
        Op::Slice { axis, start, len } => slice(a(), *axis, *start, *len),
        Op::Pad { axis, start, total } => pad(a(), *axis, *start, *total),
        Op::GatherRows(index) => gather_rows(a(), index),
        Op::ScatterAddRows { index, rows } => scatter_add_rows(a(), index, *rows),
        Op::Tanh => Ok(unary(a(), f64::tanh)),
        Op::Sigmoid => Ok(unary(a(), sigmoid)),
        Op::Relu => Ok(unary(a(), |x| x.max(0.0))),
        Op::Softplus => Ok(unary(a(), softplus)),
        Op::Exp => Ok(unary(a(), f64::exp)),
        Op::Ln => Ok(unary(a(), f64::ln)),
        Op::Sqrt => Ok(unary(a(), f64::sqrt)),
        Op::Square => Ok(unary(a(), |x| x * x)),
    }
}
