//! Length-distributed random walks.
//!
//! A walk of length `wl` records `wl + 1` visits: the start node at step 0
//! and one node per move. A walker that reaches a node without out-arcs
//! stops early, so only the nodes actually visited are recorded.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{self, stream};

/// Probability vector over walk lengths `1..=max_len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LengthDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl LengthDistribution {
    /// `probs[i]` is the probability of length `i + 1`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::config("length distribution is empty"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config("length probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("length probabilities sum to {total}, expected 1")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(LengthDistribution { probs, cdf })
    }

    pub fn uniform(max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::config("maximum walk length must be at least 1"));
        }
        Self::new(vec![1.0 / max_len as f64; max_len])
    }

    pub fn point_mass(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::config("walk length must be at least 1"));
        }
        let mut probs = vec![0.0; len];
        probs[len - 1] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_len(&self) -> usize {
        self.probs.len()
    }

    /// Expected walk length.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        // Rounding can leave the last cdf entry slightly below 1.
        let idx = if idx < self.probs.len() {
            idx
        } else {
            self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        };
        idx + 1
    }
}

impl TryFrom<Vec<f64>> for LengthDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LengthDistribution> for Vec<f64> {
    fn from(d: LengthDistribution) -> Self {
        d.probs
    }
}

/// How the next node is chosen among the out-arcs of the current one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborSampling {
    #[default]
    Uniform,
    /// Proportional to arc weight; unweighted graphs fall back to uniform.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub lengths: LengthDistribution,
    pub num_walks: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub sampling: NeighborSampling,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            lengths: LengthDistribution::uniform(5).expect("valid"),
            num_walks: 1024,
            epsilon: 0.005,
            seed: 42,
            sampling: NeighborSampling::Uniform,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_walks == 0 {
            return Err(Error::config("number of walks must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon {} not in [0, 1)", self.epsilon)));
        }
        Ok(())
    }

    /// The walk lengths shared by every start node: drawn once from the
    /// length distribution with a stream derived from the seed.
    pub fn walk_lengths(&self) -> Vec<usize> {
        let mut rng = rng::stream_rng(self.seed, stream::WALK_LENGTHS, 0);
        (0..self.num_walks).map(|_| sample_walk_length(self, &mut rng)).collect()
    }
}

pub fn sample_walk_length<R: Rng + ?Sized>(cfg: &WalkConfig, rng: &mut R) -> usize {
    cfg.lengths.sample(rng)
}

/// Dense per-worker visit counter. Resetting costs time proportional to the
/// number of distinct nodes touched, not to the graph size.
#[derive(Debug, Clone)]
pub struct VisitCounter {
    counts: Vec<u32>,
    touched: Vec<NodeId>,
    total: u64,
}

impl VisitCounter {
    pub fn new(num_nodes: usize) -> Self {
        VisitCounter { counts: vec![0; num_nodes], touched: Vec::new(), total: 0 }
    }

    #[inline]
    pub fn visit(&mut self, n: NodeId) {
        let c = &mut self.counts[n as usize];
        if *c == 0 {
            self.touched.push(n);
        }
        *c += 1;
        self.total += 1;
    }

    /// Total recorded visits.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, n: NodeId) -> u32 {
        self.counts[n as usize]
    }

    pub fn distinct(&self) -> usize {
        self.touched.len()
    }

    /// `(node, count)` pairs sorted by node id.
    pub fn sorted_counts(&mut self) -> Vec<(NodeId, u64)> {
        self.touched.sort_unstable();
        self.touched.iter().map(|&n| (n, self.counts[n as usize] as u64)).collect()
    }

    pub fn clear(&mut self) {
        for &n in &self.touched {
            self.counts[n as usize] = 0;
        }
        self.touched.clear();
        self.total = 0;
    }
}

/// Graph plus whatever precomputation the neighbour sampler needs.
#[derive(Debug)]
pub struct Walker<'g> {
    graph: &'g Graph,
    /// Cumulative arc weights aligned with the CSR target array.
    prefix: Option<Vec<f64>>,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g Graph, sampling: NeighborSampling) -> Self {
        let prefix = match (sampling, graph.is_weighted()) {
            (NeighborSampling::Weighted, true) => {
                let mut prefix = vec![0.0; graph.num_arcs()];
                for u in 0..graph.num_nodes() as NodeId {
                    let start = graph.offsets()[u as usize];
                    let mut acc = 0.0;
                    for (k, w) in graph.neighbor_weights(u).unwrap_or(&[]).iter().enumerate() {
                        acc += w;
                        prefix[start + k] = acc;
                    }
                }
                Some(prefix)
            }
            _ => None,
        };
        Walker { graph, prefix }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, c: NodeId, rng: &mut R) -> Option<NodeId> {
        let nbrs = self.graph.neighbors(c);
        if nbrs.is_empty() {
            return None;
        }
        match &self.prefix {
            None => Some(nbrs[rng.gen_range(0..nbrs.len())]),
            Some(prefix) => {
                let start = self.graph.offsets()[c as usize];
                let cum = &prefix[start..start + nbrs.len()];
                let total = *cum.last().unwrap();
                if total <= 0.0 {
                    return None;
                }
                let u = rng.gen::<f64>() * total;
                let k = cum.partition_point(|&x| x <= u).min(nbrs.len() - 1);
                Some(nbrs[k])
            }
        }
    }

    /// Records the visits of one walk of length `wl` from `start`.
    pub fn walk<R: Rng + ?Sized>(&self, start: NodeId, wl: usize, rng: &mut R, acc: &mut VisitCounter) {
        let mut c = start;
        for step in 0..=wl {
            acc.visit(c);
            if step == wl {
                break;
            }
            match self.step(c, rng) {
                Some(next) => c = next,
                None => break,
            }
        }
    }
}

/// One uniform random walk; see [`Walker::walk`].
pub fn random_walk<R: Rng + ?Sized>(g: &Graph, start: NodeId, wl: usize, rng: &mut R, acc: &mut VisitCounter) {
    Walker::new(g, NeighborSampling::Uniform).walk(start, wl, rng, acc);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn rng() -> crate::rng::StreamRng {
        stream_rng(1, 0, 0)
    }

    #[test]
    fn degenerate_length_distributions() {
        let cfg = WalkConfig { lengths: LengthDistribution::point_mass(5).unwrap(), ..Default::default() };
        let mut r = rng();
        assert!((0..1000).all(|_| sample_walk_length(&cfg, &mut r) == 5));
        let cfg = WalkConfig { lengths: LengthDistribution::new(vec![1.0]).unwrap(), ..Default::default() };
        assert!((0..1000).all(|_| sample_walk_length(&cfg, &mut r) == 1));
    }

    #[test]
    fn uniform_lengths_within_three_sigma() {
        let cfg = WalkConfig::default();
        let mut r = rng();
        let n = 100_000;
        let mut hist = [0usize; 5];
        for _ in 0..n {
            hist[sample_walk_length(&cfg, &mut r) - 1] += 1;
        }
        // Binomial(n, 0.2): sigma = sqrt(n * 0.2 * 0.8).
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for h in hist {
            assert!((h as f64 - 0.2 * n as f64).abs() < 3.0 * sigma, "{hist:?}");
        }
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(LengthDistribution::new(vec![]).is_err());
        assert!(LengthDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(LengthDistribution::new(vec![1.5, -0.5]).is_err());
        let cfg = WalkConfig { epsilon: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = WalkConfig { num_walks: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn directed_path_walk() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], true).unwrap();
        let mut acc = VisitCounter::new(3);
        random_walk(&g, 0, 2, &mut rng(), &mut acc);
        assert_eq!(acc.sorted_counts(), vec![(0, 1), (1, 1), (2, 1)]);
    }

    #[test]
    fn dangling_start_records_only_itself() {
        let g = Graph::from_edges(8, &[(0, 1)], true).unwrap();
        let mut acc = VisitCounter::new(8);
        random_walk(&g, 7, 5, &mut rng(), &mut acc);
        assert_eq!(acc.sorted_counts(), vec![(7, 1)]);
        assert_eq!(acc.total(), 1);
    }

    #[test]
    fn two_cycle_alternates() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0)], true).unwrap();
        let mut acc = VisitCounter::new(2);
        random_walk(&g, 0, 3, &mut rng(), &mut acc);
        assert_eq!(acc.sorted_counts(), vec![(0, 2), (1, 2)]);
        acc.clear();
        assert_eq!(acc.total(), 0);
        assert_eq!(acc.distinct(), 0);
    }

    #[test]
    fn weighted_sampling_follows_weights() {
        let mut b = crate::graph::GraphBuilder::new(3, true);
        b.add_weighted_edge(0, 1, 3.0).unwrap();
        b.add_weighted_edge(0, 2, 1.0).unwrap();
        b.add_weighted_edge(0, 2, 0.0).unwrap();
        let g = b.build();
        let walker = Walker::new(&g, NeighborSampling::Weighted);
        let mut acc = VisitCounter::new(3);
        let mut r = rng();
        let n = 40_000;
        for _ in 0..n {
            walker.walk(0, 1, &mut r, &mut acc);
        }
        let frac = acc.count(1) as f64 / n as f64;
        let sigma = (0.75 * 0.25 / n as f64).sqrt();
        assert!((frac - 0.75).abs() < 4.0 * sigma, "{frac}");
    }

    #[test]
    fn memoized_lengths_are_deterministic() {
        let cfg = WalkConfig { num_walks: 64, ..Default::default() };
        assert_eq!(cfg.walk_lengths(), cfg.walk_lengths());
        assert!(cfg.walk_lengths().iter().all(|&l| (1..=5).contains(&l)));
    }
}
