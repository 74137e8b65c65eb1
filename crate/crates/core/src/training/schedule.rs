//! Per-area iteration budgets from validation losses.

use serde::{Deserialize, Serialize};

use crate::error::{OxyError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaSchedule {
    pub fractions: Vec<f64>,
    pub counts: Vec<usize>,
}

impl AreaSchedule {
    pub fn uniform(areas: usize, budget: usize) -> Result<AreaSchedule> {
        rebalance_areas(&vec![0.0; areas], budget)
    }
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Largest-remainder rounding of `total * shares`; ties go to the lower index.
pub fn largest_remainder(shares: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = shares.iter().sum();
    let quotas: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Softmax fractions and integer counts summing to `budget`, every area getting at least one.
pub fn rebalance_areas(val_losses: &[f64], budget: usize) -> Result<AreaSchedule> {
    if let Some(area) = val_losses.iter().position(|v| !v.is_finite()) {
        return Err(OxyError::InvalidLoss { area });
    }
    let n = val_losses.len();
    if n == 0 || budget < n {
        return Err(OxyError::Config(format!("iteration budget {budget} is below the area count {n}")));
    }
    let fractions = softmax(val_losses);
    let mut counts = largest_remainder(&fractions, budget);
    let mut pinned = vec![false; n];
    while counts.contains(&0) {
        for k in 0..n {
            if counts[k] == 0 {
                pinned[k] = true;
            }
        }
        let free: Vec<usize> = (0..n).filter(|&k| !pinned[k]).collect();
        let rest = budget - pinned.iter().filter(|p| **p).count();
        let shares: Vec<f64> = free.iter().map(|&k| fractions[k]).collect();
        let sub = largest_remainder(&shares, rest);
        for k in 0..n {
            counts[k] = if pinned[k] { 1 } else { 0 };
        }
        for (&k, c) in free.iter().zip(sub) {
            counts[k] = c;
        }
    }
    Ok(AreaSchedule { fractions, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(rebalance_areas(&[0.3; 4], 100).unwrap().counts, vec![25; 4]);
        let s = rebalance_areas(&[2f64.ln(), 0.0], 90).unwrap();
        assert!((s.fractions[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.counts, vec![60, 30]);
    }

    #[test]
    fn floor_of_one() {
        let s = rebalance_areas(&[50.0, 0.0, 0.0], 10).unwrap();
        assert_eq!(s.counts, vec![8, 1, 1]);
        assert!(matches!(rebalance_areas(&[f64::NAN], 3), Err(OxyError::InvalidLoss { area: 0 })));
    }
}
