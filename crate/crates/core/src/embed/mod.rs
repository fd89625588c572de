//! Embedding assembly: hash every node, rank pivots, and fill one column per
//! pivot with the similarity of every node's hash to the pivot's hash.
//!
//! Two modes exist. Fixed mode takes the top `d` pivots. Size-dependent
//! mode keeps adding pivots in rank order while a budget of
//! `|N| * budget_dim` stored values lasts; the column that exhausts the
//! budget is kept, so the overshoot is at most one column.

mod io;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::io::{load_embedding, save_embedding, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::hash::{hash_all, HashVector};
use crate::rank::{pagerank, rank_nodes, PageRankConfig};
use crate::similarity::{self, compute_variances, cosine_from_parts, jaccard_from_parts, FeatureVariances, Metric};
use crate::walk::WalkConfig;

/// Default sub-interval count when digitization is on. Multiples of 1/256
/// are exact in IEEE half precision.
pub const DEFAULT_BINS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbeddingMode {
    /// The top `dim` pivots.
    Fixed { dim: usize },
    /// Pivots until `num_nodes * budget_dim` nonzeros are spent.
    Sdf { budget_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub mode: EmbeddingMode,
    /// Digitization sub-intervals; 0 disables.
    pub bins: u32,
    pub metric: Metric,
    pub walk: WalkConfig,
    pub pagerank: PageRankConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::fixed(2048)
    }
}

impl EmbeddingConfig {
    /// Fixed pivot count, no digitization.
    pub fn fixed(dim: usize) -> Self {
        EmbeddingConfig {
            mode: EmbeddingMode::Fixed { dim },
            bins: 0,
            metric: Metric::Cosine,
            walk: WalkConfig::default(),
            pagerank: PageRankConfig::default(),
        }
    }

    /// Size-dependent pivots with digitization into [`DEFAULT_BINS`].
    pub fn sdf(budget_dim: usize) -> Self {
        EmbeddingConfig { mode: EmbeddingMode::Sdf { budget_dim }, bins: DEFAULT_BINS, ..EmbeddingConfig::fixed(0) }
    }

    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        self.walk.validate()?;
        self.pagerank.validate()?;
        match self.mode {
            EmbeddingMode::Fixed { dim } if dim == 0 || dim > num_nodes => {
                return Err(Error::config(format!("pivot count {dim} must be in 1..={num_nodes}")));
            }
            EmbeddingMode::Sdf { budget_dim: 0 } => {
                return Err(Error::config("budget dimension must be at least 1"));
            }
            _ => {}
        }
        if self.bins == 1 {
            return Err(Error::config("digitization needs at least two bins (or 0 to disable)"));
        }
        if self.bins >= 2 && !self.metric.is_bounded_similarity() {
            return Err(Error::config(format!(
                "digitization maps [0, 1] onto bins, but {} is an unbounded distance",
                self.metric
            )));
        }
        Ok(())
    }

    pub fn value_bits(&self) -> u8 {
        if self.bins >= 2 {
            16
        } else {
            32
        }
    }
}

/// Nearest multiple of `1/bins`, ties away from zero.
#[inline]
pub fn digitize(s: f64, bins: u32) -> f64 {
    (s * bins as f64).round() / bins as f64
}

/// Non-zero entries of one column, rows ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumn {
    pub rows: Vec<NodeId>,
    pub values: Vec<f32>,
}

impl SparseColumn {
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, row: NodeId) -> f32 {
        self.rows.binary_search(&row).map_or(0.0, |k| self.values[k])
    }
}

/// What produced an embedding; written next to the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbeddingSource {
    Snore { config: EmbeddingConfig },
    Random { dim: usize, seed: u64 },
}

impl EmbeddingSource {
    pub fn seed(&self) -> u64 {
        match self {
            EmbeddingSource::Snore { config } => config.walk.seed,
            EmbeddingSource::Random { seed, .. } => *seed,
        }
    }
}

/// Sparse `num_rows x l` matrix stored by column, with the pivot node behind
/// every column.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    num_rows: usize,
    columns: Vec<SparseColumn>,
    ind: Vec<NodeId>,
    source: EmbeddingSource,
    value_bits: u8,
}

impl Embedding {
    /// `ind` is either empty (columns are not nodes) or one node per column.
    pub fn from_columns(
        num_rows: usize,
        columns: Vec<SparseColumn>,
        ind: Vec<NodeId>,
        source: EmbeddingSource,
        value_bits: u8,
    ) -> Result<Self> {
        if !ind.is_empty() && ind.len() != columns.len() {
            return Err(Error::Format(format!("{} feature ids for {} columns", ind.len(), columns.len())));
        }
        for c in &columns {
            if c.rows.len() != c.values.len() || c.rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format("column rows must be strictly increasing".into()));
            }
            if c.rows.last().is_some_and(|&r| r as usize >= num_rows) {
                return Err(Error::Format("column row out of range".into()));
            }
        }
        Ok(Embedding { num_rows, columns, ind, source, value_bits })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &SparseColumn {
        &self.columns[j]
    }

    /// Column index to pivot node.
    pub fn ind(&self) -> &[NodeId] {
        &self.ind
    }

    pub fn source(&self) -> &EmbeddingSource {
        &self.source
    }

    pub fn value_bits(&self) -> u8 {
        self.value_bits
    }

    pub fn get(&self, row: NodeId, col: usize) -> f32 {
        self.columns[col].get(row)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseColumn::nnz).sum()
    }

    /// Bytes needed for the stored values at the declared precision.
    pub fn value_payload_bytes(&self) -> usize {
        self.nnz() * self.value_bits as usize / 8
    }

    /// Row-major copy for consumers that read node feature vectors.
    pub fn to_rows(&self) -> RowMatrix {
        let mut counts = vec![0usize; self.num_rows + 1];
        for c in &self.columns {
            for &r in &c.rows {
                counts[r as usize + 1] += 1;
            }
        }
        for i in 0..self.num_rows {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let nnz = self.nnz();
        let mut indices = vec![0u32; nnz];
        let mut values = vec![0f32; nnz];
        for (j, c) in self.columns.iter().enumerate() {
            for (&r, &v) in c.rows.iter().zip(&c.values) {
                let slot = &mut cursor[r as usize];
                indices[*slot] = j as u32;
                values[*slot] = v;
                *slot += 1;
            }
        }
        RowMatrix { num_cols: self.columns.len(), offsets, indices, values }
    }
}

/// CSR matrix of `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    pub num_cols: usize,
    pub offsets: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f32>,
}

impl RowMatrix {
    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn from_dense(rows: &[Vec<f32>]) -> Self {
        let num_cols = rows.first().map_or(0, Vec::len);
        let mut offsets = vec![0];
        let (mut indices, mut values) = (Vec::new(), Vec::new());
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        RowMatrix { num_cols, offsets, indices, values }
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub hashing: Duration,
    pub ranking: Duration,
    pub similarity: Duration,
}

/// Hash coordinates transposed: for coordinate `k`, the rows with a nonzero
/// at `k` (ascending) and their values.
struct InvertedIndex {
    offsets: Vec<usize>,
    rows: Vec<NodeId>,
    values: Vec<f64>,
}

impl InvertedIndex {
    fn new(hashes: &[HashVector]) -> Self {
        let n = hashes.len();
        let mut offsets = vec![0usize; n + 1];
        for h in hashes {
            for &k in h.indices() {
                offsets[k as usize + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let total = offsets[n];
        let mut cursor = offsets.clone();
        let mut rows = vec![0; total];
        let mut values = vec![0.0; total];
        for (i, h) in hashes.iter().enumerate() {
            for (k, v) in h.iter() {
                let slot = &mut cursor[k as usize];
                rows[*slot] = i as NodeId;
                values[*slot] = v;
                *slot += 1;
            }
        }
        InvertedIndex { offsets, rows, values }
    }

    #[inline]
    fn postings(&self, k: NodeId) -> (&[NodeId], &[f64]) {
        let (a, b) = (self.offsets[k as usize], self.offsets[k as usize + 1]);
        (&self.rows[a..b], &self.values[a..b])
    }
}

struct Scratch {
    dot: Vec<f64>,
    shared: Vec<u32>,
    touched: Vec<NodeId>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch { dot: vec![0.0; n], shared: vec![0; n], touched: Vec::new() }
    }
}

/// Computes embedding columns for one set of hashes.
struct ColumnKernel<'a> {
    hashes: &'a [HashVector],
    metric: Metric,
    bins: u32,
    sq_norms: Vec<f64>,
    inverted: Option<InvertedIndex>,
    variances: Option<FeatureVariances>,
}

impl<'a> ColumnKernel<'a> {
    fn new(hashes: &'a [HashVector], metric: Metric, bins: u32) -> Result<Self> {
        let sq_norms = hashes.iter().map(HashVector::sq_norm).collect();
        let inverted = metric.is_bounded_similarity().then(|| InvertedIndex::new(hashes));
        let variances = match metric {
            Metric::StdEuclidean => Some(compute_variances(hashes)?),
            _ => None,
        };
        Ok(ColumnKernel { hashes, metric, bins, sq_norms, inverted, variances })
    }

    #[inline]
    fn finish(&self, s: f64) -> f32 {
        if self.bins >= 2 {
            digitize(s, self.bins) as f32
        } else {
            s as f32
        }
    }

    fn column(&self, pivot: NodeId, scratch: &mut Scratch) -> SparseColumn {
        match &self.inverted {
            Some(inv) => self.sparse_column(inv, pivot, scratch),
            None => self.dense_column(pivot),
        }
    }

    /// Cosine or Jaccard through the inverted index: only rows sharing a
    /// coordinate with the pivot are visited. For each row the products are
    /// summed in ascending coordinate order, the same order a sorted merge
    /// uses, so the values match [`similarity::cosine`] bit for bit.
    fn sparse_column(&self, inv: &InvertedIndex, pivot: NodeId, s: &mut Scratch) -> SparseColumn {
        let p = &self.hashes[pivot as usize];
        for (k, pv) in p.iter() {
            let (rows, vals) = inv.postings(k);
            for (&i, &hv) in rows.iter().zip(vals) {
                let iu = i as usize;
                if s.shared[iu] == 0 {
                    s.touched.push(i);
                }
                s.shared[iu] += 1;
                s.dot[iu] += hv * pv;
            }
        }
        s.touched.sort_unstable();
        let mut col = SparseColumn::default();
        let (p_sq, p_nnz) = (self.sq_norms[pivot as usize], p.nnz());
        for &i in &s.touched {
            let iu = i as usize;
            let sim = match self.metric {
                Metric::Cosine => cosine_from_parts(s.dot[iu], self.sq_norms[iu], p_sq),
                _ => jaccard_from_parts(s.shared[iu] as usize, self.hashes[iu].nnz(), p_nnz),
            };
            let v = self.finish(sim);
            if v != 0.0 {
                col.rows.push(i);
                col.values.push(v);
            }
            s.dot[iu] = 0.0;
            s.shared[iu] = 0;
        }
        s.touched.clear();
        col
    }

    fn dense_column(&self, pivot: NodeId) -> SparseColumn {
        let p = &self.hashes[pivot as usize];
        let mut col = SparseColumn::default();
        for (i, h) in self.hashes.iter().enumerate() {
            let d = similarity::similarity(h, p, self.metric, self.variances.as_ref()).expect("variances prepared");
            let v = self.finish(d);
            if v != 0.0 {
                col.rows.push(i as NodeId);
                col.values.push(v);
            }
        }
        col
    }

    fn columns(&self, pivots: &[NodeId]) -> Vec<SparseColumn> {
        let n = self.hashes.len();
        pivots.par_iter().map_init(|| Scratch::new(n), |s, &p| self.column(p, s)).collect()
    }
}

/// Similarity stage on precomputed hashes and a pivot order (best first).
pub fn embed_from_hashes(hashes: &[HashVector], order: &[NodeId], cfg: &EmbeddingConfig) -> Result<Embedding> {
    let n = hashes.len();
    cfg.validate(n)?;
    if order.len() != n {
        return Err(Error::config(format!("pivot order has {} entries for {n} nodes", order.len())));
    }
    let kernel = ColumnKernel::new(hashes, cfg.metric, cfg.bins)?;
    let (columns, ind) = match cfg.mode {
        EmbeddingMode::Fixed { dim } => (kernel.columns(&order[..dim]), order[..dim].to_vec()),
        EmbeddingMode::Sdf { budget_dim } => sdf_columns(&kernel, order, n as i64 * budget_dim as i64),
    };
    Embedding::from_columns(
        n,
        columns,
        ind,
        EmbeddingSource::Snore { config: cfg.clone() },
        cfg.value_bits(),
    )
}

/// Budget loop. Columns are computed in parallel batches ahead of the
/// sequential accounting; anything past the stopping column is discarded.
fn sdf_columns(kernel: &ColumnKernel<'_>, order: &[NodeId], mut budget: i64) -> (Vec<SparseColumn>, Vec<NodeId>) {
    let batch = (4 * rayon::current_num_threads()).max(16);
    let mut columns = Vec::new();
    let mut next = 0;
    'outer: while budget >= 0 && next < order.len() {
        let end = (next + batch).min(order.len());
        for col in kernel.columns(&order[next..end]) {
            budget -= col.nnz() as i64;
            columns.push(col);
            if budget < 0 {
                break 'outer;
            }
        }
        next = end;
    }
    let ind = order[..columns.len()].to_vec();
    (columns, ind)
}

/// Full pipeline with per-stage wall-clock timings.
pub fn embed_timed(g: &Graph, cfg: &EmbeddingConfig) -> Result<(Embedding, StageTimings)> {
    cfg.validate(g.num_nodes())?;
    let t = Instant::now();
    let hashes = hash_all(g, &cfg.walk)?;
    let hashing = t.elapsed();
    let t = Instant::now();
    let ranking = rank_nodes(pagerank(g, &cfg.pagerank)?.scores);
    let ranking_time = t.elapsed();
    let t = Instant::now();
    let e = embed_from_hashes(&hashes, &ranking.order, cfg)?;
    let similarity = t.elapsed();
    Ok((e, StageTimings { hashing, ranking: ranking_time, similarity }))
}

pub fn embed(g: &Graph, cfg: &EmbeddingConfig) -> Result<Embedding> {
    embed_timed(g, cfg).map(|(e, _)| e)
}

/// Fixed-pivot embedding. `cfg.mode` must be [`EmbeddingMode::Fixed`].
pub fn snore_fixed(g: &Graph, cfg: &EmbeddingConfig) -> Result<Embedding> {
    if !matches!(cfg.mode, EmbeddingMode::Fixed { .. }) {
        return Err(Error::config("snore_fixed needs a fixed-pivot configuration"));
    }
    embed(g, cfg)
}

/// Budgeted embedding. `cfg.mode` must be [`EmbeddingMode::Sdf`].
pub fn snore_sdf(g: &Graph, cfg: &EmbeddingConfig) -> Result<Embedding> {
    if !matches!(cfg.mode, EmbeddingMode::Sdf { .. }) {
        return Err(Error::config("snore_sdf needs a budgeted configuration"));
    }
    embed(g, cfg)
}
