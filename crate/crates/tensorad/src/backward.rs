//! Vector-Jacobian products, written with tensor ops so that they record
//! onto the tape when their operands are tracked.

use crate::error::Result;
use crate::op::Op;
use crate::tensor::Tensor;

pub(crate) fn vjp(op: &Op, x: &[Tensor], g: &Tensor) -> Result<Vec<Option<Tensor>>> {
    let one = |t: Tensor| Ok(vec![Some(t)]);
    match op {
        Op::Leaf => Ok(vec![]),
        Op::Add => Ok(vec![
            Some(g.sum_to(&x[0].shape)?),
            Some(g.sum_to(&x[1].shape)?),
        ]),
        Op::Sub => Ok(vec![
            Some(g.sum_to(&x[0].shape)?),
            Some(g.sum_to(&x[1].shape)?.neg()),
        ]),
        Op::Mul => Ok(vec![
            Some(g.mul(&x[1])?.sum_to(&x[0].shape)?),
            Some(g.mul(&x[0])?.sum_to(&x[1].shape)?),
        ]),
        Op::Div => {
            let ga = g.div(&x[1])?;
            let gb = ga.mul(&x[0])?.div(&x[1])?.neg();
            Ok(vec![
                Some(ga.sum_to(&x[0].shape)?),
                Some(gb.sum_to(&x[1].shape)?),
            ])
        }
        Op::Neg => one(g.neg()),
        Op::Scale(c) => one(g.scale(*c)),
        Op::AddScalar(_) => one(g.clone()),
        Op::MatMul => Ok(vec![
            Some(g.matmul(&x[1].transpose()?)?),
            Some(x[0].transpose()?.matmul(g)?),
        ]),
        Op::Transpose => one(g.transpose()?),
        Op::Reshape(_) => one(g.reshape(&x[0].shape)?),
        Op::BroadcastTo(_) => one(g.sum_to(&x[0].shape)?),
        Op::SumTo(_) | Op::SumAll | Op::SumAxis(_) => one(g.broadcast_to(&x[0].shape)?),
        Op::Concat(axis) => {
            let mut start = 0;
            let mut out = Vec::with_capacity(x.len());
            for part in x {
                let len = part.shape[*axis];
                out.push(Some(g.slice(*axis, start, len)?));
                start += len;
            }
            Ok(out)
        }
        Op::Slice { axis, start, .. } => one(g.pad(*axis, *start, x[0].shape[*axis])?),
        Op::Pad { axis, start, .. } => one(g.slice(*axis, *start, x[0].shape[*axis])?),
        Op::GatherRows(index) => one(g.scatter_add_rows(index, x[0].shape[0])?),
        Op::ScatterAddRows { index, .. } => one(g.gather_rows(index)?),
        Op::Tanh => {
            let t = x[0].tanh();
            one(g.mul(&t.square().neg().add_scalar(1.0))?)
        }
        Op::Sigmoid => {
            let s = x[0].sigmoid();
            one(g.mul(&s.mul(&s.neg().add_scalar(1.0))?)?)
        }
        Op::Relu => {
            let step: Vec<f64> = x[0].data.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
            one(g.mul(&Tensor::untracked(x[0].shape.clone(), step))?)
        }
        Op::Softplus => one(g.mul(&x[0].sigmoid())?),
        Op::Exp => one(g.mul(&x[0].exp())?),
        Op::Ln => one(g.div(&x[0])?),
        Op::Sqrt => one(g.div(&x[0].sqrt().scale(2.0))?),
        Op::Square => one(g.mul(&x[0])?.scale(2.0)),
    }
}
