#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snore::eval::{head_objective, Design};
use snore::graph::LabelTable;
use snore::{Graph, HashVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Undirected G(n, m) without self-loops or duplicate edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, m: usize) -> Graph {
    let mut seen = std::collections::BTreeSet::new();
    let max_edges = n * (n - 1) / 2;
    while seen.len() < m.min(max_edges) {
        let (u, v) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if u != v {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    Graph::from_edges(n, &seen.into_iter().collect::<Vec<_>>(), false).unwrap()
}

/// Any directed graph, loops and repeated arcs allowed.
pub fn random_digraph(rng: &mut impl Rng, n: usize, arcs: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (0..arcs).map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32))).collect();
    Graph::from_edges(n, &edges, true).unwrap()
}

/// Planted partition: node `i` is in block `i % blocks`; each edge is drawn
/// until it joins two nodes of one block, except with probability `mix`.
pub fn block_model(rng: &mut impl Rng, n: usize, blocks: usize, m: usize, mix: f64) -> (Graph, LabelTable) {
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < m {
        let (u, v) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if u == v {
            continue;
        }
        if (u as usize % blocks == v as usize % blocks) || rng.gen::<f64>() < mix {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let g = Graph::from_edges(n, &seen.into_iter().collect::<Vec<_>>(), false).unwrap();
    let labels = LabelTable::new((0..n).map(|i| vec![(i % blocks) as u32]).collect(), blocks).unwrap();
    (g, labels)
}

/// Dense Google matrix iterated to a fixed point: column `j` spreads
/// `1/deg(j)` over its out-arcs (multiplicities counted), dangling columns
/// spread uniformly.
pub fn dense_pagerank(g: &Graph, damping: f64) -> Vec<f64> {
    let n = g.num_nodes();
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        let nb = g.neighbors(j as u32);
        if nb.is_empty() {
            for row in m.iter_mut() {
                row[j] = 1.0 / n as f64;
            }
        } else {
            for &i in nb {
                m[i as usize][j] += 1.0 / nb.len() as f64;
            }
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| damping * (0..n).map(|j| m[i][j] * r[j]).sum::<f64>() + (1.0 - damping) / n as f64)
            .collect();
        let delta: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if delta < 1e-15 {
            break;
        }
    }
    let s: f64 = r.iter().sum();
    r.iter().map(|x| x / s).collect()
}

/// Random hash over coordinates `0..dim` with positive values summing to 1.
pub fn random_hash(rng: &mut impl Rng, dim: u32, density: f64) -> HashVector {
    let mut idx = Vec::new();
    let mut raw = Vec::new();
    for k in 0..dim {
        if rng.gen::<f64>() < density {
            idx.push(k);
            raw.push(rng.gen_range(0.01..1.0));
        }
    }
    let total: f64 = raw.iter().sum();
    HashVector::new(idx, raw.iter().map(|v| v / total).collect()).unwrap()
}

pub fn dense(h: &HashVector, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (k, x) in h.iter() {
        v[k as usize] = x;
    }
    v
}

pub fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Micro and macro F1 from dense node-by-class indicator matrices. Each F1
/// is formed as the exact ratio `2TP / (2TP + FP + FN)` before rounding.
pub fn confusion_f1(pred: &[Vec<u32>], truth: &[Vec<u32>], num_classes: usize) -> (f64, f64) {
    let indicator = |sets: &[Vec<u32>]| -> Vec<Vec<bool>> {
        sets.iter()
            .map(|s| {
                let mut row = vec![false; num_classes];
                for &c in s {
                    row[c as usize] = true;
                }
                row
            })
            .collect()
    };
    let (p, t) = (indicator(pred), indicator(truth));
    let mut conf = vec![[0u64; 4]; num_classes]; // [tp, fp, fn, tn]
    for (pr, tr) in p.iter().zip(&t) {
        for c in 0..num_classes {
            let cell = match (pr[c], tr[c]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            conf[c][cell] += 1;
        }
    }
    let ratio = |tp: u64, fp: u64, fn_: u64| {
        let den = 2 * tp + fp + fn_;
        if den == 0 {
            0.0
        } else {
            (2 * tp) as f64 / den as f64
        }
    };
    let total = |k: usize| conf.iter().map(|c| c[k]).sum::<u64>();
    let micro = ratio(total(0), total(1), total(2));
    let macro_ = conf.iter().map(|c| ratio(c[0], c[1], c[2])).sum::<f64>() / num_classes as f64;
    (micro, macro_)
}

/// Largest relative error, in norm, between the analytic gradient of one
/// logistic head and central finite differences.
pub fn logreg_gradient_error(rng: &mut impl Rng, n: usize, dim: usize) -> f64 {
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..dim).map(|_| if rng.gen::<f64>() < 0.5 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
        .collect();
    let x = snore::embed::RowMatrix::from_dense(&rows);
    let design = Design::gather(&x, &(0..n).collect::<Vec<_>>());
    let y: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = rng.gen_range(-1.0..1.0);
    let l2 = rng.gen_range(0.1..2.0);
    let (_, gw, gb) = head_objective(&design, &y, &w, b, l2);
    let h = 1e-5;
    let loss = |w: &[f64], b: f64| head_objective(&design, &y, w, b, l2).0;
    let mut fd = Vec::with_capacity(dim + 1);
    for k in 0..dim {
        let (mut plus, mut minus) = (w.clone(), w.clone());
        plus[k] += h;
        minus[k] -= h;
        fd.push((loss(&plus, b) - loss(&minus, b)) / (2.0 * h));
    }
    fd.push((loss(&w, b + h) - loss(&w, b - h)) / (2.0 * h));
    let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
    let diff = analytic.iter().zip(&fd).map(|(a, f)| (a - f) * (a - f)).sum::<f64>().sqrt();
    let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

pub fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

/// Directory with `<name>/edges.tsv` and `<name>/labels.tsv` datasets.
pub fn data_dir() -> PathBuf {
    std::env::var_os("SNORE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
