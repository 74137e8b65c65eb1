//! Recording structure and the reverse sweep.

use std::sync::{Arc, Mutex, MutexGuard};

use crate::backward::vjp;
use crate::error::{Result, TensorError};
use crate::op::{self, Op, Operand};
use crate::tensor::Tensor;

/// An input as seen by a recorded node.
#[derive(Clone)]
pub(crate) struct Slot {
    pub id: Option<usize>,
    pub shape: Vec<usize>,
    pub data: Arc<Vec<f64>>,
}

#[derive(Clone)]
pub(crate) struct Node {
    pub op: Op,
    pub inputs: Vec<Slot>,
    pub shape: Vec<usize>,
    pub data: Arc<Vec<f64>>,
}

#[derive(Clone)]
pub(crate) struct Tracked {
    pub tape: Tape,
    pub id: usize,
}

/// Append-only list of primitive applications in evaluation order.
///
/// Node inputs always carry smaller ids than the node itself. The tape holds
/// values, never tensor handles, so dropping the last tensor frees it.
#[derive(Clone, Default)]
pub struct Tape {
    nodes: Arc<Mutex<Vec<Node>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, Vec<Node>> {
        self.nodes.lock().expect("tape mutex poisoned")
    }

    pub(crate) fn same(&self, other: &Tape) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes)
    }

    /// Registers a copy of `value` as a differentiable leaf.
    pub fn var(&self, value: &Tensor) -> Tensor {
        let id = {
            let mut nodes = self.lock();
            nodes.push(Node {
                op: Op::Leaf,
                inputs: Vec::new(),
                shape: value.shape.clone(),
                data: Arc::clone(&value.data),
            });
            nodes.len() - 1
        };
        Tensor {
            shape: value.shape.clone(),
            data: Arc::clone(&value.data),
            node: Some(Tracked {
                tape: self.clone(),
                id,
            }),
        }
    }

    pub(crate) fn record(&self, op: Op, inputs: &[&Tensor], shape: &[usize], data: Arc<Vec<f64>>) -> usize {
        let slots = inputs
            .iter()
            .map(|t| Slot {
                id: t.node.as_ref().map(|n| n.id),
                shape: t.shape.clone(),
                data: Arc::clone(&t.data),
            })
            .collect();
        let mut nodes = self.lock();
        nodes.push(Node {
            op,
            inputs: slots,
            shape: shape.to_vec(),
            data,
        });
        nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn op_names(&self) -> Vec<&'static str> {
        self.lock().iter().map(|n| n.op.name()).collect()
    }

    /// Re-evaluates every node in order, substituting `leaf_values` for the
    /// listed leaf ids. Returns the value of each node, untracked.
    pub fn replay(&self, leaf_values: &[(usize, Tensor)]) -> Result<Vec<Tensor>> {
        let nodes = self.lock().clone();
        let mut values: Vec<Tensor> = Vec::with_capacity(nodes.len());
        for (id, node) in nodes.iter().enumerate() {
            let value = match node.op {
                Op::Leaf => match leaf_values.iter().find(|(lid, _)| *lid == id) {
                    Some((_, t)) => t.detach(),
                    None => Tensor::untracked(node.shape.clone(), node.data.to_vec()),
                },
                _ => {
                    let ins: Vec<(Vec<usize>, Arc<Vec<f64>>)> = node
                        .inputs
                        .iter()
                        .map(|s| match s.id {
                            Some(j) => (values[j].shape.clone(), Arc::clone(&values[j].data)),
                            None => (s.shape.clone(), Arc::clone(&s.data)),
                        })
                        .collect();
                    let operands: Vec<Operand> = ins
                        .iter()
                        .map(|(shape, data)| Operand { shape, data })
                        .collect();
                    let (shape, data) = op::forward(&node.op, &operands)?;
                    Tensor::untracked(shape, data)
                }
            };
            values.push(value);
        }
        Ok(values)
    }
}

/// Reverse-mode gradient of a scalar `output` with respect to each of `wrt`.
///
/// With `create_graph` the backward computation is itself recorded on the
/// tape, so the returned gradients can be differentiated again. A `wrt`
/// tensor the output does not depend on gets an all-zero gradient.
pub fn grad(output: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Result<Vec<Tensor>> {
    if output.numel() != 1 {
        return Err(TensorError::NonScalar(output.shape.clone()));
    }
    let zeros = || wrt.iter().map(|w| Tensor::zeros(&w.shape)).collect();
    let Some(out) = &output.node else {
        return Ok(zeros());
    };
    let tape = &out.tape;
    let out_id = out.id;

    let targets: Vec<Option<usize>> = wrt
        .iter()
        .map(|w| match &w.node {
            Some(tr) if tr.tape.same(tape) && tr.id <= out_id => Some(tr.id),
            _ => None,
        })
        .collect();
    if targets.iter().all(Option::is_none) {
        return Ok(zeros());
    }

    // Forward mark: nodes downstream of some target.
    let mut needed = vec![false; out_id + 1];
    for id in targets.iter().flatten() {
        needed[*id] = true;
    }
    {
        let nodes = tape.lock();
        for id in 0..=out_id {
            if !needed[id] {
                needed[id] = nodes[id]
                    .inputs
                    .iter()
                    .any(|s| s.id.is_some_and(|j| needed[j]));
            }
        }
    }
    if !needed[out_id] {
        return Ok(zeros());
    }

    let mut grads: Vec<Option<Tensor>> = vec![None; out_id + 1];
    grads[out_id] = Some(Tensor::ones(&output.shape));

    for id in (0..=out_id).rev() {
        if !needed[id] {
            continue;
        }
        let Some(g) = grads[id].clone() else {
            continue;
        };
        let node = tape.lock()[id].clone();
        if matches!(node.op, Op::Leaf) {
            continue;
        }
        let inputs: Vec<Tensor> = node
            .inputs
            .iter()
            .map(|s| Tensor {
                shape: s.shape.clone(),
                data: Arc::clone(&s.data),
                node: match (create_graph, s.id) {
                    (true, Some(j)) => Some(Tracked {
                        tape: tape.clone(),
                        id: j,
                    }),
                    _ => None,
                },
            })
            .collect();
        let g = if create_graph { g } else { g.detach() };
        let input_grads = vjp(&node.op, &inputs, &g)?;
        for (slot, ig) in node.inputs.iter().zip(input_grads) {
            let (Some(j), Some(ig)) = (slot.id, ig) else {
                continue;
            };
            if !needed[j] {
                continue;
            }
            grads[j] = Some(match grads[j].take() {
                Some(acc) => acc.add(&ig)?,
                None => ig,
            });
        }
    }

    Ok(targets
        .iter()
        .zip(wrt)
        .map(|(t, w)| {
            t.and_then(|id| grads[id].clone())
                .unwrap_or_else(|| Tensor::zeros(&w.shape))
        })
        .collect())
}

impl Tape {
    pub fn grad(&self, output: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Result<Vec<Tensor>> {
        grad(output, wrt, create_graph)
    }
}
