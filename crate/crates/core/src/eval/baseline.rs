//! Reference methods run under the same protocol: label propagation over
//! the graph and a uniformly random embedding.

use rand::Rng;
use rayon::prelude::*;

use super::logreg::predict_topk;
use crate::embed::{Embedding, EmbeddingSource, SparseColumn};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelTable, NodeId};
use crate::rng::{stream, stream_rng};

pub const LP_TOLERANCE: f64 = 1e-6;
pub const LP_MAX_ITERS: usize = 1000;

/// Outcome of the spreading iteration. `scores` is row-major,
/// `num_nodes x num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub scores: Vec<f64>,
    pub num_classes: usize,
    pub iterations: usize,
    /// L1 change of every iteration.
    pub deltas: Vec<f64>,
}

impl Propagation {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.num_classes..(i + 1) * self.num_classes]
    }
}

/// Iterates `F <- alpha S F + (1 - alpha) Y` from `F = Y`, with
/// `S = D^-1/2 A D^-1/2` and `Y` the one-hot rows of the training nodes.
pub fn propagate(g: &Graph, labels: &LabelTable, train: &[usize], alpha: f64) -> Result<Propagation> {
    if train.is_empty() {
        return Err(Error::Eval("label propagation needs at least one labeled training node".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha {alpha} not in [0, 1]")));
    }
    let n = g.num_nodes();
    if labels.num_nodes() != n {
        return Err(Error::ShapeMismatch { rows: n, nodes: labels.num_nodes() });
    }
    let c = labels.num_classes();
    let mut y = vec![0.0; n * c];
    for &t in train {
        for &l in labels.labels(t) {
            y[t * c + l as usize] = 1.0;
        }
    }
    let degree: Vec<f64> = (0..n as NodeId)
        .map(|u| match g.neighbor_weights(u) {
            Some(w) => w.iter().sum(),
            None => g.neighbors(u).len() as f64,
        })
        .collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();

    let mut f = y.clone();
    let mut next = vec![0.0; n * c];
    let mut deltas = Vec::new();
    for _ in 0..LP_MAX_ITERS {
        next.par_chunks_mut(c).with_min_len(256).enumerate().for_each(|(u, out)| {
            out.fill(0.0);
            let nb = g.neighbors(u as NodeId);
            let w = g.neighbor_weights(u as NodeId);
            for (k, &v) in nb.iter().enumerate() {
                let a = w.map_or(1.0, |w| w[k]) * inv_sqrt[u] * inv_sqrt[v as usize];
                let src = &f[v as usize * c..(v as usize + 1) * c];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
            for (o, yv) in out.iter_mut().zip(&y[u * c..(u + 1) * c]) {
                *o = alpha * *o + (1.0 - alpha) * yv;
            }
        });
        let delta: f64 = f.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut f, &mut next);
        deltas.push(delta);
        if delta < LP_TOLERANCE {
            break;
        }
    }
    Ok(Propagation { scores: f, num_classes: c, iterations: deltas.len(), deltas })
}

/// Predicted classes for `nodes`, each getting as many classes as it has
/// true labels. Nodes whose score row is all zero (unreachable from any
/// training label) fall back to the most frequent training classes.
pub fn label_propagation(
    g: &Graph,
    labels: &LabelTable,
    train: &[usize],
    nodes: &[usize],
    alpha: f64,
) -> Result<Vec<Vec<u32>>> {
    let prop = propagate(g, labels, train, alpha)?;
    let mut freq = vec![0.0; labels.num_classes()];
    for &t in train {
        for &l in labels.labels(t) {
            freq[l as usize] += 1.0;
        }
    }
    Ok(nodes
        .iter()
        .map(|&i| {
            let k = labels.k(i).max(1);
            let row = prop.row(i);
            if row.iter().all(|&v| v == 0.0) {
                predict_topk(&freq, k)
            } else {
                predict_topk(row, k)
            }
        })
        .collect())
}

/// Dense `n x dim` matrix of independent Uniform[0, 1) values. Row `i` is
/// drawn from its own stream, so the result does not depend on threading.
pub fn random_embedding(n: usize, dim: usize, seed: u64) -> Result<Embedding> {
    if n == 0 || dim == 0 {
        return Err(Error::config("random embedding needs at least one row and one column"));
    }
    let rows: Vec<Vec<f32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, stream::RANDOM_EMBEDDING, i as u64);
            (0..dim).map(|_| rng.gen::<f32>()).collect()
        })
        .collect();
    let mut columns = vec![SparseColumn::default(); dim];
    for (i, row) in rows.iter().enumerate() {
        for (col, &v) in columns.iter_mut().zip(row) {
            if v != 0.0 {
                col.rows.push(i as NodeId);
                col.values.push(v);
            }
        }
    }
    Embedding::from_columns(n, columns, Vec::new(), EmbeddingSource::Random { dim, seed }, 32)
}
