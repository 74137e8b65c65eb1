//! Reconstruction loss and the nutrient-gradient variance penalty.

use std::sync::Arc;

use tensorad::{grad, Tensor};

use crate::error::{OxyError, Result};
use crate::oxynet::BatchFeatures;

/// Mean squared error over entries with `mask` set.
pub fn reconstruction_loss(prediction: &Tensor, observed: &[f64], mask: &[bool]) -> Result<Tensor> {
    let n = prediction.numel();
    if observed.len() != n || mask.len() != n {
        return Err(OxyError::Data("loss inputs differ in length".into()));
    }
    let count = mask.iter().filter(|m| **m).count();
    if count == 0 {
        return Err(OxyError::EmptySupervision);
    }
    let shape = prediction.shape().to_vec();
    let target = Tensor::new(&shape, observed.iter().zip(mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect())?;
    let weight = Tensor::new(&shape, mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())?;
    let sq = prediction.sub(&target)?.square().mul(&weight)?;
    Ok(sq.sum().scale(1.0 / count as f64))
}

/// `L_r + lambda * (R_N + R_P)`.
pub fn total_loss(l_r: &Tensor, r_n: &Tensor, r_p: &Tensor, lambda: f64) -> Result<Tensor> {
    Ok(l_r.add(&r_n.add(r_p)?.scale(lambda))?)
}

/// Population variance of the gradient set; zero with fewer than two entries.
pub fn gradient_variance(g: &Tensor) -> Tensor {
    if g.numel() < 2 {
        return Tensor::scalar(0.0);
    }
    g.variance()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Nutrient {
    Nitrate,
    Phosphate,
}

impl Nutrient {
    pub fn column(self) -> usize {
        match self {
            Nutrient::Nitrate => crate::oxynet::features::NITRATE_COL,
            Nutrient::Phosphate => crate::oxynet::features::PHOSPHATE_COL,
        }
    }
}

/// Penalty value plus the per-node derivatives it was computed from.
pub struct ChemTerm {
    pub penalty: Tensor,
    pub gradients: Vec<f64>,
}

/// Batch targets carrying an observed value of `nutrient`, at most `cap` of them.
pub fn chem_candidates(batch: &BatchFeatures, nutrient: Nutrient, cap: usize) -> Vec<usize> {
    (0..batch.targets.len())
        .filter(|&p| batch.factor_observed(batch.targets[p], nutrient.column()))
        .take(cap)
        .collect()
}

fn reach(in_nbrs: &[Vec<usize>], start: usize, hops: usize) -> Vec<bool> {
    let mut seen = vec![false; in_nbrs.len()];
    seen[start] = true;
    let mut frontier = vec![start];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &n in &frontier {
            for &m in &in_nbrs[n] {
                if !seen[m] {
                    seen[m] = true;
                    next.push(m);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Groups candidates so that no member's input lies inside another member's receptive
/// field. Within a group, one backward pass of the summed predictions then yields each
/// member's own derivative exactly.
pub fn independent_groups(batch: &BatchFeatures, candidates: &[usize], hops: usize) -> Vec<Vec<usize>> {
    if hops == 0 {
        return if candidates.is_empty() { Vec::new() } else { vec![candidates.to_vec()] };
    }
    let n = batch.node_count();
    let mut in_nbrs = vec![Vec::new(); n];
    for (s, d) in batch.src.iter().zip(batch.dst.iter()) {
        if s != d {
            in_nbrs[*d].push(*s);
        }
    }
    let fields: Vec<Vec<bool>> = candidates.iter().map(|&p| reach(&in_nbrs, batch.targets[p], hops)).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (c, &p) in candidates.iter().enumerate() {
        let node = batch.targets[p];
        let fits = |g: &Vec<usize>| {
            g.iter().all(|&q| {
                let other = candidates.iter().position(|&x| x == q).expect("member");
                !fields[other][node] && !fields[c][batch.targets[q]]
            })
        };
        match groups.iter_mut().find(|g| fits(g)) {
            Some(g) => g.push(p),
            None => groups.push(vec![p]),
        }
    }
    groups
}

/// Derivatives `d x_hat_m / d F_m` for the candidates and their variance.
///
/// With `create_graph` the penalty stays differentiable with respect to the parameters.
pub fn chem_regularizer(
    prediction: &Tensor,
    nutrient_leaf: &Tensor,
    batch: &BatchFeatures,
    candidates: &[usize],
    hops: usize,
    create_graph: bool,
) -> Result<ChemTerm> {
    if candidates.len() < 2 || nutrient_leaf.node_id().is_none() {
        return Ok(ChemTerm {
            penalty: Tensor::scalar(0.0),
            gradients: Vec::new(),
        });
    }
    let mut parts = Vec::new();
    for group in independent_groups(batch, candidates, hops) {
        let picked = prediction.gather_rows(&Arc::new(group.clone()))?.sum();
        let g = grad(&picked, &[nutrient_leaf], create_graph)?.remove(0);
        let rows: Vec<usize> = group.iter().map(|&p| batch.targets[p]).collect();
        parts.push(g.gather_rows(&Arc::new(rows))?);
    }
    let refs: Vec<&Tensor> = parts.iter().collect();
    let g = Tensor::concat(&refs, 0)?;
    Ok(ChemTerm {
        penalty: gradient_variance(&g),
        gradients: g.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_mse() {
        let p = Tensor::new(&[3, 1], vec![3.0, -4.0, 100.0]).unwrap();
        let l = reconstruction_loss(&p, &[0.0, 0.0, 5.0], &[true, true, false]).unwrap();
        assert_eq!(l.item(), 12.5);
        let l2 = reconstruction_loss(&p, &[0.0, 0.0, -9.0], &[true, true, false]).unwrap();
        assert_eq!(l2.item(), 12.5);
        assert!(matches!(
            reconstruction_loss(&p, &[0.0; 3], &[false; 3]),
            Err(OxyError::EmptySupervision)
        ));
    }

    #[test]
    fn total_and_variance() {
        let t = total_loss(&Tensor::scalar(1.0), &Tensor::scalar(0.5), &Tensor::scalar(0.5), 2.0).unwrap();
        assert_eq!(t.item(), 3.0);
        let v = gradient_variance(&Tensor::from_vec(vec![1.0, 2.0, 3.0]));
        assert!((v.item() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(gradient_variance(&Tensor::from_vec(vec![4.0])).item(), 0.0);
    }
}
