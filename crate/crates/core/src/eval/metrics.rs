use crate::error::{Error, Result};
use crate::graph::LabelTable;

/// Micro and macro F1 over `(node, class)` pairs.
///
/// `predicted[j]` holds the classes predicted for `nodes[j]`, exactly as many
/// as that node has true labels. Macro F1 averages over every class of the
/// label table; a class that is neither true nor predicted anywhere scores 0.
pub fn micro_macro_f1(predicted: &[Vec<u32>], truth: &LabelTable, nodes: &[usize]) -> Result<(f64, f64)> {
    if nodes.is_empty() {
        return Err(Error::Eval("empty evaluation set".into()));
    }
    if predicted.len() != nodes.len() {
        return Err(Error::Eval(format!("{} predictions for {} nodes", predicted.len(), nodes.len())));
    }
    let c = truth.num_classes();
    let (mut tp, mut fp, mut fn_) = (vec![0u64; c], vec![0u64; c], vec![0u64; c]);
    for (pred, &node) in predicted.iter().zip(nodes) {
        let t = truth.labels(node);
        if t.is_empty() || pred.len() != t.len() {
            return Err(Error::Eval(format!("node {node}: {} predictions for {} true labels", pred.len(), t.len())));
        }
        for &p in pred {
            if p as usize >= c {
                return Err(Error::Eval(format!("predicted class {p} outside {c} classes")));
            }
            if t.contains(&p) {
                tp[p as usize] += 1;
            } else {
                fp[p as usize] += 1;
            }
        }
        for &l in t {
            if !pred.contains(&l) {
                fn_[l as usize] += 1;
            }
        }
    }
    let f1 = |tp: u64, fp: u64, fn_: u64| {
        let den = 2 * tp + fp + fn_;
        if den == 0 {
            0.0
        } else {
            2.0 * tp as f64 / den as f64
        }
    };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_ = (0..c).map(|k| f1(tp[k], fp[k], fn_[k])).sum::<f64>() / c as f64;
    Ok((micro, macro_))
}
