//! Neighbourhood hashes: visit frequencies of the walks started at a node,
//! pruned below a relative threshold and L1-normalised.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{self, stream};
use crate::walk::{VisitCounter, WalkConfig, Walker};

/// Sparse, L1-normalised vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HashVector {
    indices: Vec<NodeId>,
    values: Vec<f64>,
}

impl HashVector {
    /// Checked constructor for hand-built hashes. Values must be positive,
    /// indices strictly increasing and the values must sum to 1 (within 1e-6).
    pub fn new(indices: Vec<NodeId>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::config("hash indices and values differ in length"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("hash indices must be strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("hash values must be positive and finite"));
        }
        if !values.is_empty() && (values.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::config("hash values must sum to 1"));
        }
        Ok(HashVector { indices, values })
    }

    /// Applies the pruning rule to raw `(node, count)` pairs sorted by node:
    /// with `T` the total of all counts, entries with `count < T * epsilon`
    /// are dropped and the survivors normalised. If nothing survives, the
    /// most frequent node (lowest id on ties) is kept alone.
    pub fn from_counts(counts: &[(NodeId, u64)], epsilon: f64) -> Self {
        let total: u64 = counts.iter().map(|c| c.1).sum();
        if total == 0 {
            return HashVector::default();
        }
        let threshold = total as f64 * epsilon;
        let mut kept: Vec<(NodeId, u64)> = counts.iter().copied().filter(|&(_, c)| c as f64 >= threshold).collect();
        if kept.is_empty() {
            let best = counts.iter().copied().filter(|c| c.1 > 0).fold(None, |best: Option<(NodeId, u64)>, c| match best {
                Some(b) if b.1 > c.1 || (b.1 == c.1 && b.0 < c.0) => Some(b),
                _ => Some(c),
            });
            kept.extend(best);
        }
        let kept_total: u64 = kept.iter().map(|c| c.1).sum();
        let (indices, values) = kept.into_iter().map(|(n, c)| (n, c as f64 / kept_total as f64)).unzip();
        HashVector { indices, values }
    }

    pub fn indices(&self) -> &[NodeId] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, idx: NodeId) -> f64 {
        self.indices.binary_search(&idx).map_or(0.0, |k| self.values[k])
    }

    /// Sum of squared values, accumulated in index order.
    pub fn sq_norm(&self) -> f64 {
        let mut s = 0.0;
        for v in &self.values {
            s += v * v;
        }
        s
    }
}

fn hash_with(
    walker: &Walker<'_>,
    n: NodeId,
    lengths: &[usize],
    cfg: &WalkConfig,
    acc: &mut VisitCounter,
) -> HashVector {
    acc.clear();
    let mut rng = rng::stream_rng(cfg.seed, stream::NODE_WALKS, n as u64);
    for &wl in lengths {
        walker.walk(n, wl, &mut rng, acc);
    }
    let counts = acc.sorted_counts();
    HashVector::from_counts(&counts, cfg.epsilon)
}

/// Hash of a single node. Equal to element `n` of [`hash_all`].
pub fn hash_node(g: &Graph, n: NodeId, cfg: &WalkConfig) -> Result<HashVector> {
    cfg.validate()?;
    if n as usize >= g.num_nodes() {
        return Err(Error::NodeOutOfRange { id: n as usize, num_nodes: g.num_nodes() });
    }
    let walker = Walker::new(g, cfg.sampling);
    let mut acc = VisitCounter::new(g.num_nodes());
    Ok(hash_with(&walker, n, &cfg.walk_lengths(), cfg, &mut acc))
}

/// Hashes every node in parallel on the current rayon pool.
pub fn hash_all(g: &Graph, cfg: &WalkConfig) -> Result<Vec<HashVector>> {
    cfg.validate()?;
    let walker = Walker::new(g, cfg.sampling);
    let lengths = cfg.walk_lengths();
    let n = g.num_nodes();
    Ok((0..n as NodeId)
        .into_par_iter()
        .with_min_len(64)
        .map_init(|| VisitCounter::new(n), |acc, i| hash_with(&walker, i, &lengths, cfg, acc))
        .collect())
}

/// Debug dump: `node_id<TAB>idx:val,idx:val,...` with six decimals.
pub fn write_hash_dump(hashes: &[HashVector], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for (i, h) in hashes.iter().enumerate() {
            write!(out, "{i}\t")?;
            for (k, (idx, val)) in h.iter().enumerate() {
                if k > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{idx}:{val:.6}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
