//! One-vs-rest L2-regularised logistic regression on sparse rows.
//!
//! Each head minimises
//!
//! ```text
//! (1/n) sum_i [ softplus(z_i) - y_i z_i ] + l2 / (2n) * |w|^2,   z_i = w.x_i + b
//! ```
//!
//! (the bias is not penalised) by full-batch accelerated gradient descent
//! with an Armijo backtracking line search and a monotone restart, so the
//! loss never increases between epochs.

use serde::{Deserialize, Serialize};

use crate::embed::RowMatrix;
use crate::error::{Error, Result};
use crate::graph::LabelTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    /// Inverse of the data-term weight: `l2 = 1` matches a unit `C`.
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop when an epoch lowers the loss by less than this, relatively.
    pub tolerance: f64,
    /// Step multiplier after a rejected trial, in (0, 1).
    pub backtrack: f64,
    /// Step multiplier at the start of each epoch, at least 1.
    pub growth: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { l2: 1.0, max_epochs: 500, tolerance: 1e-6, backtrack: 0.5, growth: 2.0 }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("l2 strength must be finite and nonnegative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("logistic regression needs at least one epoch"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("logistic regression tolerance must be nonnegative"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.growth >= 1.0) {
            return Err(Error::config("line search factors out of range"));
        }
        Ok(())
    }
}

/// Training rows gathered from a [`RowMatrix`], values widened to `f64`.
#[derive(Debug, Clone)]
pub struct Design {
    dim: usize,
    offsets: Vec<usize>,
    idx: Vec<u32>,
    vals: Vec<f64>,
}

impl Design {
    pub fn gather(x: &RowMatrix, rows: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let (mut idx, mut vals) = (Vec::new(), Vec::new());
        for &r in rows {
            let (i, v) = x.row(r);
            idx.extend_from_slice(i);
            vals.extend(v.iter().map(|&v| v as f64));
            offsets.push(idx.len());
        }
        Design { dim: x.num_cols, offsets, idx, vals }
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.idx[a..b], &self.vals[a..b])
    }

    /// `out_i = w.x_i + b`.
    fn forward(&self, w: &[f64], b: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (idx, vals) = self.row(i);
            let mut z = b;
            for (&k, &v) in idx.iter().zip(vals) {
                z += w[k as usize] * v;
            }
            *o = z;
        }
    }

    /// `g = X^T r`.
    fn backward(&self, r: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            let (idx, vals) = self.row(i);
            for (&k, &v) in idx.iter().zip(vals) {
                g[k as usize] += ri * v;
            }
        }
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn data_loss(z: &[f64], y: &[bool]) -> f64 {
    let mut s = 0.0;
    for (&zi, &yi) in z.iter().zip(y) {
        s += softplus(zi) - if yi { zi } else { 0.0 };
    }
    s / z.len() as f64
}

/// Objective and gradient of one head at `(w, b)`: returns
/// `(loss, grad_w, grad_b)`.
pub fn head_objective(x: &Design, y: &[bool], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.num_rows();
    let mut z = vec![0.0; n];
    x.forward(w, b, &mut z);
    let reg = l2 / (2.0 * n as f64) * w.iter().map(|v| v * v).sum::<f64>();
    let loss = data_loss(&z, y) + reg;
    let r: Vec<f64> = z.iter().zip(y).map(|(&zi, &yi)| (sigmoid(zi) - yi as u8 as f64) / n as f64).collect();
    let mut gw = vec![0.0; x.dim];
    x.backward(&r, &mut gw);
    for (g, wv) in gw.iter_mut().zip(w) {
        *g += l2 / n as f64 * wv;
    }
    (loss, gw, r.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Set when the class was absent (or universal) in training; the head
    /// then outputs this prior for every row.
    pub prior: Option<f64>,
    /// Objective after every epoch, starting with the initial point.
    pub losses: Vec<f64>,
}

impl Head {
    pub fn prob(&self, idx: &[u32], vals: &[f32]) -> f64 {
        if let Some(p) = self.prior {
            return p;
        }
        let mut z = self.bias;
        for (&k, &v) in idx.iter().zip(vals) {
            z += self.weights[k as usize] * v as f64;
        }
        sigmoid(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub heads: Vec<Head>,
}

impl LogisticModel {
    pub fn num_classes(&self) -> usize {
        self.heads.len()
    }

    /// Heads that fell back to a constant prior.
    pub fn degenerate_heads(&self) -> usize {
        self.heads.iter().filter(|h| h.prior.is_some()).count()
    }

    pub fn predict_proba(&self, idx: &[u32], vals: &[f32]) -> Vec<f64> {
        self.heads.iter().map(|h| h.prob(idx, vals)).collect()
    }
}

/// Per-head optimiser state.
struct HeadState {
    /// Objective at the current iterate.
    loss: f64,
    step: f64,
    /// Momentum sequence; 1 means no momentum on the next epoch.
    theta: f64,
    active: bool,
    losses: Vec<f64>,
}

/// Trains all non-degenerate heads together by accelerated gradient descent
/// with a monotone safeguard: an epoch whose result would raise the loss is
/// discarded and momentum restarts, so the next epoch is a plain backtracked
/// gradient step. Weights are stored feature-major (`w[k * c + h]`) so one
/// sweep over the rows serves every head.
fn train_heads(x: &Design, ys: &[Vec<bool>], cfg: &LogRegConfig, lipschitz: f64) -> Vec<Head> {
    let n = x.num_rows();
    let c = ys.len();
    let d = x.dim;
    let (nf, lam) = (n as f64, cfg.l2 / n as f64);
    let label = |i: usize, h: usize| ys[h][i] as u8 as f64;
    // Current iterate (w, b, z = Xw + b), the previous one, and the
    // extrapolated point y where the gradient is taken.
    let (mut w, mut w_prev, mut y) = (vec![0.0; d * c], vec![0.0; d * c], vec![0.0; d * c]);
    let (mut b, mut b_prev, mut by) = (vec![0.0; c], vec![0.0; c], vec![0.0; c]);
    let (mut z, mut z_prev, mut zy) = (vec![0.0; n * c], vec![0.0; n * c], vec![0.0; n * c]);
    let mut dir = vec![0.0; n * c];
    let mut r = vec![0.0; n * c];
    let mut g = vec![0.0; d * c];
    let mut trial = vec![0.0; n];
    // At the origin every logit is 0 and the mean loss is ln 2.
    let mut states: Vec<HeadState> = (0..c)
        .map(|_| HeadState {
            loss: std::f64::consts::LN_2,
            step: 1.0 / lipschitz,
            theta: 1.0,
            active: true,
            losses: vec![std::f64::consts::LN_2],
        })
        .collect();

    for _ in 0..cfg.max_epochs {
        if states.iter().all(|s| !s.active) {
            break;
        }
        let thetas: Vec<f64> = states.iter().map(|s| (1.0 + (1.0 + 4.0 * s.theta * s.theta).sqrt()) / 2.0).collect();
        let beta: Vec<f64> = states.iter().zip(&thetas).map(|(s, t)| (s.theta - 1.0) / t).collect();
        let extrapolate = |cur: &[f64], prev: &[f64], out: &mut [f64]| {
            for ((o, (&a, &p)), h) in out.iter_mut().zip(cur.iter().zip(prev)).zip((0..c).cycle()) {
                *o = a + beta[h] * (a - p);
            }
        };
        extrapolate(&w, &w_prev, &mut y);
        extrapolate(&b, &b_prev, &mut by);
        extrapolate(&z, &z_prev, &mut zy);

        let mut data_y = vec![0.0; c];
        for i in 0..n {
            for h in 0..c {
                let k = i * c + h;
                let yl = label(i, h);
                data_y[h] += softplus(zy[k]) - yl * zy[k];
                r[k] = if states[h].active { (sigmoid(zy[k]) - yl) / nf } else { 0.0 };
            }
        }
        // g = X^T r + lam * y, and the bias gradient.
        g.fill(0.0);
        for i in 0..n {
            let ri = &r[i * c..(i + 1) * c];
            let (idx, vals) = x.row(i);
            for (&k, &v) in idx.iter().zip(vals) {
                let gk = &mut g[k as usize * c..(k as usize + 1) * c];
                for (gv, rv) in gk.iter_mut().zip(ri) {
                    *gv += rv * v;
                }
            }
        }
        let mut gb = vec![0.0; c];
        for i in 0..n {
            for h in 0..c {
                gb[h] += r[i * c + h];
            }
        }
        let (mut g_sq, mut y_dot_g, mut y_sq) = (vec![0.0; c], vec![0.0; c], vec![0.0; c]);
        for k in 0..d {
            for h in 0..c {
                let j = k * c + h;
                if states[h].active {
                    g[j] += lam * y[j];
                } else {
                    g[j] = 0.0;
                }
                g_sq[h] += g[j] * g[j];
                y_dot_g[h] += y[j] * g[j];
                y_sq[h] += y[j] * y[j];
            }
        }
        // Moving head h along -g changes z by -t * (X g_h + gb_h).
        for i in 0..n {
            let out = &mut dir[i * c..(i + 1) * c];
            out.copy_from_slice(&gb);
            let (idx, vals) = x.row(i);
            for (&k, &v) in idx.iter().zip(vals) {
                let gk = &g[k as usize * c..(k as usize + 1) * c];
                for (o, gv) in out.iter_mut().zip(gk) {
                    *o += gv * v;
                }
            }
        }
        for h in 0..c {
            let s = &mut states[h];
            if !s.active {
                continue;
            }
            let total_sq = g_sq[h] + gb[h] * gb[h];
            if total_sq == 0.0 {
                s.active = false;
                continue;
            }
            let f_y = data_y[h] / nf + 0.5 * lam * y_sq[h];
            let mut t = s.step * cfg.growth;
            let accepted = loop {
                let mut data = 0.0;
                for i in 0..n {
                    let zt = zy[i * c + h] - t * dir[i * c + h];
                    trial[i] = zt;
                    data += softplus(zt) - label(i, h) * zt;
                }
                let new_sq = y_sq[h] - 2.0 * t * y_dot_g[h] + t * t * g_sq[h];
                let candidate = data / nf + 0.5 * lam * new_sq;
                if candidate <= f_y - 0.5 * t * total_sq {
                    break Some(candidate);
                }
                t *= cfg.backtrack;
                if t < 1e-300 {
                    break None;
                }
            };
            let Some(new_loss) = accepted else {
                s.active = false;
                continue;
            };
            s.step = t;
            if new_loss > s.loss {
                // Momentum overshot: stay put and restart from a plain step.
                for k in 0..d {
                    w_prev[k * c + h] = w[k * c + h];
                }
                b_prev[h] = b[h];
                for i in 0..n {
                    z_prev[i * c + h] = z[i * c + h];
                }
                s.theta = 1.0;
                continue;
            }
            for k in 0..d {
                let j = k * c + h;
                w_prev[j] = w[j];
                w[j] = y[j] - t * g[j];
            }
            b_prev[h] = b[h];
            b[h] = by[h] - t * gb[h];
            for i in 0..n {
                z_prev[i * c + h] = z[i * c + h];
                z[i * c + h] = trial[i];
            }
            s.theta = thetas[h];
            let decrease = s.loss - new_loss;
            s.loss = new_loss;
            s.losses.push(new_loss);
            if decrease <= cfg.tolerance * new_loss.abs().max(f64::MIN_POSITIVE) {
                s.active = false;
            }
        }
    }
    states
        .into_iter()
        .enumerate()
        .map(|(h, s)| Head { weights: (0..d).map(|k| w[k * c + h]).collect(), bias: b[h], prior: None, losses: s.losses })
        .collect()
}

/// Trains one head per class on the given rows of `x`.
pub fn train_logreg(x: &RowMatrix, rows: &[usize], labels: &LabelTable, cfg: &LogRegConfig) -> Result<LogisticModel> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(Error::Eval("no training rows".into()));
    }
    let design = Design::gather(x, rows);
    let n = rows.len();
    // Bound on the Hessian of the mean loss (bias counted as a unit feature).
    let mean_sq = (0..n).map(|i| 1.0 + design.row(i).1.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n as f64;
    let lipschitz = 0.25 * mean_sq + cfg.l2 / n as f64;
    let mut heads: Vec<Option<Head>> = Vec::with_capacity(labels.num_classes());
    let mut trainable = Vec::new();
    for c in 0..labels.num_classes() as u32 {
        let y: Vec<bool> = rows.iter().map(|&r| labels.labels(r).contains(&c)).collect();
        let positives = y.iter().filter(|&&v| v).count();
        if positives == 0 || positives == n {
            let prior = positives as f64 / n as f64;
            heads.push(Some(Head { weights: vec![0.0; design.dim], bias: 0.0, prior: Some(prior), losses: Vec::new() }));
        } else {
            heads.push(None);
            trainable.push(y);
        }
    }
    let mut trained = train_heads(&design, &trainable, cfg, lipschitz).into_iter();
    let heads = heads.into_iter().map(|h| h.unwrap_or_else(|| trained.next().expect("one trained head per slot"))).collect();
    Ok(LogisticModel { heads })
}

/// The `k` most probable classes, ties to the lower class id, returned in
/// ascending id order.
pub fn predict_topk(probs: &[f64], k: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..probs.len() as u32).collect();
    order.sort_by(|&a, &b| probs[b as usize].total_cmp(&probs[a as usize]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}
