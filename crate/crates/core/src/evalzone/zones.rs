//! Zoning extraction: k-means over the per-node hypernetwork outputs.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OxyError, Result};
use crate::oceangraph::NodeKey;

const MAX_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneAssignment {
    pub keys: Vec<NodeKey>,
    pub zone: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

impl ZoneAssignment {
    pub fn zone_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "i,j,d,zone_id")?;
        for (k, z) in self.keys.iter().zip(&self.zone) {
            writeln!(out, "{},{},{},{}", k.i, k.j, k.d, z)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding then Lloyd iterations. Points are visited in key order and
/// zones are numbered by first appearance, so the result ignores input order.
pub fn kmeans(keys: &[NodeKey], points: &[Vec<f64>], k: usize, seed: u64) -> Result<ZoneAssignment> {
    if keys.len() != points.len() || points.is_empty() {
        return Err(OxyError::Data("zoning needs one point per node".into()));
    }
    if k == 0 {
        return Err(OxyError::Config("zone count must be positive".into()));
    }
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&n| keys[n]);
    let pts: Vec<&[f64]> = order.iter().map(|&n| points[n].as_slice()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = vec![pts[rng.random_range(0..pts.len())].to_vec()];
    let mut nearest: Vec<f64> = pts.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = pts.len() - 1;
        for (n, &d) in nearest.iter().enumerate() {
            if u < d {
                pick = n;
                break;
            }
            u -= d;
        }
        centroids.push(pts[pick].to_vec());
        for (n, p) in pts.iter().enumerate() {
            nearest[n] = nearest[n].min(dist2(p, centroids.last().expect("pushed")));
        }
    }

    let dim = pts[0].len();
    let mut label = vec![0usize; pts.len()];
    for iter in 0..MAX_ITERS {
        let mut changed = false;
        for (n, p) in pts.iter().enumerate() {
            let best = (0..centroids.len())
                .min_by(|&a, &b| dist2(p, &centroids[a]).total_cmp(&dist2(p, &centroids[b])))
                .expect("at least one centroid");
            if best != label[n] || iter == 0 {
                changed |= best != label[n];
                label[n] = best;
            }
        }
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (n, p) in pts.iter().enumerate() {
            counts[label[n]] += 1;
            for (s, v) in sums[label[n]].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..centroids.len() {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed && iter > 0 {
            break;
        }
    }

    let mut relabel = vec![usize::MAX; centroids.len()];
    let mut next = 0;
    for &l in &label {
        if relabel[l] == usize::MAX {
            relabel[l] = next;
            next += 1;
        }
    }
    let mut new_centroids = vec![Vec::new(); next];
    for (old, &new) in relabel.iter().enumerate() {
        if new != usize::MAX {
            new_centroids[new] = centroids[old].clone();
        }
    }
    let mut zone = vec![0; keys.len()];
    for (pos, &n) in order.iter().enumerate() {
        zone[n] = relabel[label[pos]];
    }
    Ok(ZoneAssignment {
        keys: keys.to_vec(),
        zone,
        centroids: new_centroids,
    })
}

/// Flattens `(Z_alpha, Z_beta)` rows into one vector per node.
pub fn zone_points(alpha: &[f64], beta: &[f64], zone_dim: usize) -> Vec<Vec<f64>> {
    let (a, b) = (zone_dim * zone_dim, zone_dim);
    let n = beta.len() / b;
    (0..n)
        .map(|k| {
            let mut v = alpha[k * a..(k + 1) * a].to_vec();
            v.extend_from_slice(&beta[k * b..(k + 1) * b]);
            v
        })
        .collect()
}
