//! Transductive node-classification protocol.
//!
//! For every repetition and shuffle the labeled nodes are permuted; for every
//! training fraction the first part of the permutation trains a classifier
//! and the rest is scored with top-`k_i` predictions. Scores are aggregated
//! per fraction and over all cells.

mod baseline;
mod logreg;
mod metrics;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::baseline::{label_propagation, propagate, random_embedding, Propagation, LP_MAX_ITERS, LP_TOLERANCE};
pub use self::logreg::{head_objective, predict_topk, train_logreg, Design, Head, LogRegConfig, LogisticModel};
pub use self::metrics::micro_macro_f1;
use crate::embed::{Embedding, EmbeddingSource, RowMatrix};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelTable};
use crate::rng::{derive_seed, stream, stream_rng};

/// Width of the random baseline embedding.
pub const RANDOM_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub train_fractions: Vec<f64>,
    pub shuffles: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub classifier: LogRegConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            train_fractions: (1..=9).map(|i| i as f64 / 10.0).collect(),
            shuffles: 10,
            repetitions: 10,
            seed: 42,
            classifier: LogRegConfig::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_fractions.is_empty() {
            return Err(Error::config("no training fractions"));
        }
        if let Some(f) = self.train_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::config(format!("training fraction {f} not in (0, 1)")));
        }
        if self.shuffles == 0 || self.repetitions == 0 {
            return Err(Error::config("shuffles and repetitions must be at least 1"));
        }
        self.classifier.validate()
    }
}

/// Walk seed used for repetition `rep`. Repetition 0 keeps the base seed, so
/// an embedding saved with seed `s` is the first repetition of a run seeded
/// with `s`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    if rep == 0 {
        seed
    } else {
        derive_seed(seed, stream::REPETITION, rep as u64)
    }
}

/// Labeled nodes in the shuffled order of `(rep, shuffle)`.
pub fn shuffled_nodes(labels: &LabelTable, cfg: &ProtocolConfig, rep: usize, shuffle: usize) -> Vec<usize> {
    let mut nodes = labels.labeled_nodes();
    let mut rng = stream_rng(cfg.seed, stream::SPLITS, (rep * cfg.shuffles + shuffle) as u64);
    nodes.shuffle(&mut rng);
    nodes
}

fn train_size(fraction: f64, m: usize) -> Result<usize> {
    let n = (fraction * m as f64).floor() as usize;
    if n == 0 || n >= m {
        return Err(Error::Eval(format!("fraction {fraction} of {m} labeled nodes leaves an empty train or test set")));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub repetition: usize,
    pub shuffle: usize,
    pub fraction: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Classifier heads that had no positive (or no negative) example.
    pub degenerate_heads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionScore {
    pub fraction: f64,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub protocol: ProtocolConfig,
    /// Configuration of the embedding (first repetition) when one was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSource>,
    pub fractions: Vec<FractionScore>,
    /// Mean and population standard deviation over all cells.
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub degenerate_heads: usize,
    pub cells: Vec<CellScore>,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl EvalReport {
    fn aggregate(method: String, protocol: ProtocolConfig, embedding: Option<EmbeddingSource>, cells: Vec<CellScore>) -> Self {
        let fractions = protocol
            .train_fractions
            .iter()
            .map(|&f| {
                let of = cells.iter().filter(|c| c.fraction == f);
                let (micro_mean, micro_std) = mean_std(of.clone().map(|c| c.micro_f1));
                let (macro_mean, macro_std) = mean_std(of.map(|c| c.macro_f1));
                FractionScore { fraction: f, micro_mean, micro_std, macro_mean, macro_std }
            })
            .collect();
        let (micro_mean, micro_std) = mean_std(cells.iter().map(|c| c.micro_f1));
        let (macro_mean, macro_std) = mean_std(cells.iter().map(|c| c.macro_f1));
        let degenerate_heads = cells.iter().map(|c| c.degenerate_heads).sum();
        EvalReport {
            method,
            protocol,
            embedding,
            fractions,
            micro_mean,
            micro_std,
            macro_mean,
            macro_std,
            degenerate_heads,
            cells,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// `fraction, micro_mean, micro_std, macro_mean, macro_std` per fraction.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fraction\tmicro_mean\tmicro_std\tmacro_mean\tmacro_std\n");
        for f in &self.fractions {
            out += &format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                f.fraction, f.micro_mean, f.micro_std, f.macro_mean, f.macro_std
            );
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.tsv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("json", self.to_json()), ("tsv", self.to_tsv())] {
            let path = dir.join(format!("{stem}.{ext}"));
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Predicts classes for `test` after training on `train`; returns the
/// predictions (each test node gets `k_i` classes) and a degenerate-head
/// count.
type Predictor<'a> = dyn Fn(&[usize], &[usize]) -> Result<(Vec<Vec<u32>>, usize)> + Sync + 'a;

fn run_repetition(labels: &LabelTable, cfg: &ProtocolConfig, rep: usize, predict: &Predictor<'_>) -> Result<Vec<CellScore>> {
    let shuffles: Vec<Vec<usize>> = (0..cfg.shuffles).map(|s| shuffled_nodes(labels, cfg, rep, s)).collect();
    let m = shuffles[0].len();
    let cells: Vec<(usize, f64)> =
        (0..cfg.shuffles).flat_map(|s| cfg.train_fractions.iter().map(move |&f| (s, f))).collect();
    cells
        .into_par_iter()
        .with_max_len(1)
        .map(|(shuffle, fraction)| {
            let n = train_size(fraction, m)?;
            let (train, test) = shuffles[shuffle].split_at(n);
            let (pred, degenerate_heads) = predict(train, test)?;
            let (micro_f1, macro_f1) = micro_macro_f1(&pred, labels, test)?;
            Ok(CellScore { repetition: rep, shuffle, fraction, micro_f1, macro_f1, degenerate_heads })
        })
        .collect()
}

fn check_labels(labels: &LabelTable, cfg: &ProtocolConfig) -> Result<()> {
    cfg.validate()?;
    let m = labels.labeled_nodes().len();
    let mut seen = vec![false; labels.num_classes()];
    for i in labels.labeled_nodes() {
        for &l in labels.labels(i) {
            seen[l as usize] = true;
        }
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Eval("labels must cover at least two classes".into()));
    }
    for &f in &cfg.train_fractions {
        train_size(f, m)?;
    }
    Ok(())
}

fn logreg_predictor<'a>(x: &'a RowMatrix, labels: &'a LabelTable, cfg: &'a LogRegConfig) -> impl Fn(&[usize], &[usize]) -> Result<(Vec<Vec<u32>>, usize)> + Sync + 'a {
    move |train, test| {
        let model = train_logreg(x, train, labels, cfg)?;
        let pred = test
            .iter()
            .map(|&i| {
                let (idx, vals) = x.row(i);
                predict_topk(&model.predict_proba(idx, vals), labels.k(i))
            })
            .collect();
        Ok((pred, model.degenerate_heads()))
    }
}

/// Protocol over an embedding produced per repetition by `embedding_for`.
pub fn run_protocol_with(
    labels: &LabelTable,
    cfg: &ProtocolConfig,
    method: &str,
    mut embedding_for: impl FnMut(usize) -> Result<Embedding>,
) -> Result<EvalReport> {
    check_labels(labels, cfg)?;
    let mut cells = Vec::new();
    let mut first_source = None;
    for rep in 0..cfg.repetitions {
        let e = embedding_for(rep)?;
        if e.num_rows() != labels.num_nodes() {
            return Err(Error::ShapeMismatch { rows: e.num_rows(), nodes: labels.num_nodes() });
        }
        first_source.get_or_insert_with(|| e.source().clone());
        let x = e.to_rows();
        drop(e);
        let predict = logreg_predictor(&x, labels, &cfg.classifier);
        cells.extend(run_repetition(labels, cfg, rep, &predict)?);
    }
    Ok(EvalReport::aggregate(method.to_string(), cfg.clone(), first_source, cells))
}

/// Protocol with one fixed embedding shared by every repetition.
pub fn run_protocol(e: &Embedding, labels: &LabelTable, cfg: &ProtocolConfig) -> Result<EvalReport> {
    if e.num_rows() != labels.num_nodes() {
        return Err(Error::ShapeMismatch { rows: e.num_rows(), nodes: labels.num_nodes() });
    }
    check_labels(labels, cfg)?;
    let x = e.to_rows();
    let predict = logreg_predictor(&x, labels, &cfg.classifier);
    let mut cells = Vec::new();
    for rep in 0..cfg.repetitions {
        cells.extend(run_repetition(labels, cfg, rep, &predict)?);
    }
    let method = match e.source() {
        EmbeddingSource::Random { .. } => "random",
        EmbeddingSource::Snore { .. } => "snore",
    };
    Ok(EvalReport::aggregate(method.into(), cfg.clone(), Some(e.source().clone()), cells))
}

/// Random-embedding baseline, regenerated for every repetition.
pub fn run_random_baseline(labels: &LabelTable, cfg: &ProtocolConfig, dim: usize) -> Result<EvalReport> {
    run_protocol_with(labels, cfg, "random", |rep| random_embedding(labels.num_nodes(), dim, repetition_seed(cfg.seed, rep)))
}

/// Label propagation under the same splits.
pub fn run_label_propagation(g: &Graph, labels: &LabelTable, cfg: &ProtocolConfig, alpha: f64) -> Result<EvalReport> {
    if g.num_nodes() != labels.num_nodes() {
        return Err(Error::ShapeMismatch { rows: g.num_nodes(), nodes: labels.num_nodes() });
    }
    check_labels(labels, cfg)?;
    let predict = |train: &[usize], test: &[usize]| Ok((label_propagation(g, labels, train, test, alpha)?, 0));
    let mut cells = Vec::new();
    for rep in 0..cfg.repetitions {
        cells.extend(run_repetition(labels, cfg, rep, &predict)?);
    }
    Ok(EvalReport::aggregate("label-propagation".into(), cfg.clone(), None, cells))
}
