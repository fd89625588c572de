//! Similarities and distances between hash vectors.
//!
//! All metrics walk the two sorted index lists once, so one evaluation costs
//! `O(nnz(a) + nnz(b))`. Coordinates absent from a vector are zero.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::HashVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
    #[serde(rename = "seuclidean")]
    StdEuclidean,
    Canberra,
    Jaccard,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Cosine, Metric::Euclidean, Metric::StdEuclidean, Metric::Canberra, Metric::Jaccard];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::StdEuclidean => "seuclidean",
            Metric::Canberra => "canberra",
            Metric::Jaccard => "jaccard",
        }
    }

    /// Cosine and Jaccard are similarities in `[0, 1]` that vanish on
    /// disjoint supports; the other three are unbounded distances.
    pub fn is_bounded_similarity(self) -> bool {
        matches!(self, Metric::Cosine | Metric::Jaccard)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "seuclidean" | "std-euclidean" => Ok(Metric::StdEuclidean),
            "canberra" => Ok(Metric::Canberra),
            "jaccard" => Ok(Metric::Jaccard),
            other => Err(Error::config(format!(
                "unknown metric `{other}` (expected cosine, euclidean, seuclidean, canberra or jaccard)"
            ))),
        }
    }
}

pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Population variance of every hash coordinate across all nodes, floored
/// at [`VARIANCE_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVariances(Vec<f64>);

impl FeatureVariances {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: u32) -> f64 {
        self.0[i as usize]
    }
}

/// Variance per coordinate over all `hashes`, counting absent entries as
/// zeros. The coordinate space has one dimension per node (`hashes.len()`).
pub fn compute_variances(hashes: &[HashVector]) -> Result<FeatureVariances> {
    let n = hashes.len();
    if n < 2 {
        return Err(Error::config("variances need at least two hash vectors"));
    }
    let mut sum = vec![0.0; n];
    let mut present = vec![0usize; n];
    for h in hashes {
        for (i, v) in h.iter() {
            let i = i as usize;
            if i >= n {
                return Err(Error::NodeOutOfRange { id: i, num_nodes: n });
            }
            sum[i] += v;
            present[i] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    // Absent entries contribute (0 - mean)^2 each.
    let mut sq = vec![0.0; n];
    for h in hashes {
        for (i, v) in h.iter() {
            let d = v - mean[i as usize];
            sq[i as usize] += d * d;
        }
    }
    let var = (0..n)
        .map(|i| {
            let absent = (n - present[i]) as f64;
            let v = (sq[i] + absent * mean[i] * mean[i]) / n as f64;
            v.max(VARIANCE_FLOOR)
        })
        .collect();
    Ok(FeatureVariances(var))
}

/// Visits the union of both supports in index order with both values
/// (zero where absent).
#[inline]
fn for_each_union(a: &HashVector, b: &HashVector, mut f: impl FnMut(u32, f64, f64)) {
    let (ai, av, bi, bv) = (a.indices(), a.values(), b.indices(), b.values());
    let (mut i, mut j) = (0, 0);
    while i < ai.len() && j < bi.len() {
        match ai[i].cmp(&bi[j]) {
            Ordering::Less => {
                f(ai[i], av[i], 0.0);
                i += 1;
            }
            Ordering::Greater => {
                f(bi[j], 0.0, bv[j]);
                j += 1;
            }
            Ordering::Equal => {
                f(ai[i], av[i], bv[j]);
                i += 1;
                j += 1;
            }
        }
    }
    for k in i..ai.len() {
        f(ai[k], av[k], 0.0);
    }
    for k in j..bi.len() {
        f(bi[k], 0.0, bv[k]);
    }
}

/// Dot product by sorted-merge intersection.
#[inline]
pub fn sparse_dot(a: &HashVector, b: &HashVector) -> f64 {
    let (ai, av, bi, bv) = (a.indices(), a.values(), b.indices(), b.values());
    let (mut i, mut j) = (0, 0);
    let mut dot = 0.0;
    while i < ai.len() && j < bi.len() {
        match ai[i].cmp(&bi[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                dot += av[i] * bv[j];
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// Size of the support intersection.
#[inline]
pub fn intersection_size(a: &HashVector, b: &HashVector) -> usize {
    let (ai, bi) = (a.indices(), b.indices());
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < ai.len() && j < bi.len() {
        match ai[i].cmp(&bi[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Cosine from a dot product and the two squared norms. Written so that a
/// vector compared with itself gives exactly 1: `sqrt(x * x) == x` in IEEE
/// arithmetic.
#[inline]
pub(crate) fn cosine_from_parts(dot: f64, sq_a: f64, sq_b: f64) -> f64 {
    if dot == 0.0 {
        return 0.0;
    }
    (dot / (sq_a * sq_b).sqrt()).min(1.0)
}

pub fn cosine(a: &HashVector, b: &HashVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    cosine_from_parts(sparse_dot(a, b), a.sq_norm(), b.sq_norm())
}

#[inline]
pub(crate) fn jaccard_from_parts(inter: usize, nnz_a: usize, nnz_b: usize) -> f64 {
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / (nnz_a + nnz_b - inter) as f64
}

/// Binary Jaccard on the supports.
pub fn jaccard(a: &HashVector, b: &HashVector) -> f64 {
    jaccard_from_parts(intersection_size(a, b), a.nnz(), b.nnz())
}

pub fn euclidean(a: &HashVector, b: &HashVector) -> f64 {
    let mut s = 0.0;
    for_each_union(a, b, |_, x, y| s += (x - y) * (x - y));
    s.sqrt()
}

/// Euclidean distance with each squared difference divided by that
/// coordinate's variance.
pub fn std_euclidean(a: &HashVector, b: &HashVector, v: &FeatureVariances) -> f64 {
    let mut s = 0.0;
    for_each_union(a, b, |i, x, y| s += (x - y) * (x - y) / v.get(i));
    s.sqrt()
}

/// `sum |a_i - b_i| / (|a_i| + |b_i|)`, with `0/0` terms contributing 0.
pub fn canberra(a: &HashVector, b: &HashVector) -> f64 {
    let mut s = 0.0;
    for_each_union(a, b, |_, x, y| {
        let den = x.abs() + y.abs();
        if den > 0.0 {
            s += (x - y).abs() / den;
        }
    });
    s
}

/// Evaluates `m` on two hashes. `variances` must be given for
/// [`Metric::StdEuclidean`] and is ignored otherwise.
pub fn similarity(a: &HashVector, b: &HashVector, m: Metric, variances: Option<&FeatureVariances>) -> Result<f64> {
    Ok(match m {
        Metric::Cosine => cosine(a, b),
        Metric::Jaccard => jaccard(a, b),
        Metric::Euclidean => euclidean(a, b),
        Metric::Canberra => canberra(a, b),
        Metric::StdEuclidean => {
            let v = variances.ok_or_else(|| Error::config("standardized euclidean needs feature variances"))?;
            std_euclidean(a, b, v)
        }
    })
}
