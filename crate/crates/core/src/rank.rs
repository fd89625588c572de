//! PageRank by power iteration and the descending pivot order derived from it.
//!
//! The iteration is
//!
//! ```text
//! r' = damping * C r + (damping * dangling_mass + 1 - damping) / |N|
//! ```
//!
//! where `C[i][j] = 1 / deg(j)` for every arc `j -> i` and `dangling_mass`
//! is the score held by nodes without out-arcs. With `damping = 1` this is
//! the plain `r' = C r` iteration plus uniform redistribution of dangling
//! mass, so the scores stay a probability vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankConfig {
    /// Stop once the L1 change between iterates falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
    pub damping: f64,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig { tolerance: 1e-6, max_iters: 100, damping: 0.85 }
    }
}

impl PageRankConfig {
    /// The undamped iteration.
    pub fn pure_power() -> Self {
        PageRankConfig { damping: 1.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::config("pagerank tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("pagerank needs at least one iteration"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("damping {} not in (0, 1]", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` was reached before the tolerance was met; the
    /// scores are then the last iterate.
    pub converged: bool,
}

/// Transposed adjacency plus inverse out-degrees, reusable across
/// iterations.
struct PullOperator {
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    inv_degree: Vec<f64>,
}

impl PullOperator {
    fn new(g: &Graph) -> Self {
        let (in_offsets, in_sources) = g.transpose();
        let inv_degree =
            (0..g.num_nodes() as NodeId).map(|u| if g.degree(u) == 0 { 0.0 } else { 1.0 / g.degree(u) as f64 }).collect();
        PullOperator { in_offsets, in_sources, inv_degree }
    }

    fn apply(&self, r: &[f64], next: &mut [f64], damping: f64) {
        let n = r.len();
        let contrib: Vec<f64> = r.iter().zip(&self.inv_degree).map(|(x, d)| x * d).collect();
        let dangling: f64 = r.iter().zip(&self.inv_degree).filter(|(_, d)| **d == 0.0).map(|(x, _)| x).sum();
        let base = (damping * dangling + (1.0 - damping)) / n as f64;
        next.par_iter_mut().with_min_len(1024).enumerate().for_each(|(v, out)| {
            let mut s = 0.0;
            for &u in &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]] {
                s += contrib[u as usize];
            }
            *out = damping * s + base;
        });
    }
}

pub fn pagerank(g: &Graph, cfg: &PageRankConfig) -> Result<PageRank> {
    cfg.validate()?;
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::config("pagerank of an empty graph"));
    }
    let op = PullOperator::new(g);
    let mut r = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        op.apply(&r, &mut next, cfg.damping);
        iterations += 1;
        let delta: f64 = r.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut r, &mut next);
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }
    let total: f64 = r.iter().sum();
    for x in &mut r {
        *x /= total;
    }
    Ok(PageRank { scores: r, iterations, converged })
}

/// Scores and the node order sorted by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub scores: Vec<f64>,
    pub order: Vec<NodeId>,
}

/// Stable descending sort; equal scores keep ascending node id order.
pub fn rank_nodes(scores: Vec<f64>) -> Ranking {
    let mut order: Vec<NodeId> = (0..scores.len() as NodeId).collect();
    order.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    Ranking { scores, order }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_is_uniform() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], false).unwrap();
        let pr = pagerank(&g, &PageRankConfig::pure_power()).unwrap();
        assert!(pr.converged);
        for x in &pr.scores {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(rank_nodes(pr.scores).order, vec![0, 1, 2]);
    }

    #[test]
    fn rank_order_and_ties() {
        assert_eq!(rank_nodes(vec![0.2, 0.5, 0.3]).order, vec![1, 2, 0]);
        assert_eq!(rank_nodes(vec![0.25; 4]).order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn dangling_mass_is_conserved() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 3)], true).unwrap();
        for cfg in [PageRankConfig::default(), PageRankConfig::pure_power()] {
            let pr = pagerank(&g, &cfg).unwrap();
            assert!((pr.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        // Bipartite path with damping 1 oscillates with period two.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap();
        let cfg = PageRankConfig { max_iters: 11, ..PageRankConfig::pure_power() };
        let pr = pagerank(&g, &cfg).unwrap();
        assert!(!pr.converged);
        assert_eq!(pr.iterations, 11);
        assert!((pr.scores[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(PageRankConfig { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(PageRankConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(PageRankConfig { damping: 0.0, ..Default::default() }.validate().is_err());
        assert!(PageRankConfig { damping: 1.1, ..Default::default() }.validate().is_err());
    }
}
