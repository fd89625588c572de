//! Compressed sparse adjacency, dataset loaders and structural statistics.
//!
//! Node ids are dense `u32` values in `0..num_nodes`. Undirected graphs are
//! stored as symmetric pairs of directed arcs; a self-loop is stored once.
//! Parallel arcs are kept and count as extra probability mass for walkers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Immutable CSR adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Option<Vec<f64>>,
    directed: bool,
}

impl Graph {
    /// Builds a graph from `(src, dst)` pairs. For undirected graphs every
    /// pair contributes both arcs.
    pub fn from_edges(num_nodes: usize, edges: &[(NodeId, NodeId)], directed: bool) -> Result<Self> {
        let mut builder = GraphBuilder::new(num_nodes, directed);
        for &(u, v) in edges {
            builder.add_edge(u, v)?;
        }
        Ok(builder.build())
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored directed arcs.
    pub fn num_arcs(&self) -> usize {
        self.targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    /// Out-neighbours of `n` in insertion order. Panics if `n` is out of range.
    #[inline]
    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        let n = n as usize;
        &self.targets[self.offsets[n]..self.offsets[n + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, n: NodeId) -> Option<&[f64]> {
        let n = n as usize;
        self.weights.as_ref().map(|w| &w[self.offsets[n]..self.offsets[n + 1]])
    }

    #[inline]
    pub(crate) fn degree(&self, n: NodeId) -> usize {
        let n = n as usize;
        self.offsets[n + 1] - self.offsets[n]
    }

    pub fn out_degree(&self, n: NodeId) -> Result<usize> {
        if n as usize >= self.num_nodes() {
            return Err(Error::NodeOutOfRange { id: n as usize, num_nodes: self.num_nodes() });
        }
        Ok(self.degree(n))
    }

    /// Iterates over every stored arc as `(src, dst)`.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.num_nodes() as NodeId).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Edge count in the convention datasets report: arcs for directed
    /// graphs, unordered pairs (self-loops counted once) for undirected ones.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            return self.num_arcs();
        }
        let loops = self.arcs().filter(|(u, v)| u == v).count();
        (self.num_arcs() - loops) / 2 + loops
    }

    /// Returns a copy with isolated nodes appended so that the graph has at
    /// least `n` nodes. Used when labels reference nodes without edges.
    pub fn padded_to(&self, n: usize) -> Graph {
        if n <= self.num_nodes() {
            return self.clone();
        }
        let mut offsets = self.offsets.clone();
        offsets.resize(n + 1, self.num_arcs());
        Graph { offsets, targets: self.targets.clone(), weights: self.weights.clone(), directed: self.directed }
    }

    /// Transposed adjacency (in-arcs), as `(offsets, sources)`.
    pub(crate) fn transpose(&self) -> (Vec<usize>, Vec<NodeId>) {
        let n = self.num_nodes();
        let mut counts = vec![0usize; n + 1];
        for &v in &self.targets {
            counts[v as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut sources = vec![0; self.num_arcs()];
        for (u, v) in self.arcs() {
            let slot = &mut cursor[v as usize];
            sources[*slot] = u;
            *slot += 1;
        }
        (offsets, sources)
    }
}

/// Accumulates edges and produces a [`Graph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    num_nodes: usize,
    directed: bool,
    arcs: Vec<(NodeId, NodeId, f64)>,
    weighted: bool,
}

impl GraphBuilder {
    pub fn new(num_nodes: usize, directed: bool) -> Self {
        GraphBuilder { num_nodes, directed, arcs: Vec::new(), weighted: false }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        self.push(u, v, 1.0)
    }

    pub fn add_weighted_edge(&mut self, u: NodeId, v: NodeId, w: f64) -> Result<()> {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::config(format!("edge ({u}, {v}) has invalid weight {w}")));
        }
        self.weighted = true;
        self.push(u, v, w)
    }

    fn push(&mut self, u: NodeId, v: NodeId, w: f64) -> Result<()> {
        for id in [u, v] {
            if id as usize >= self.num_nodes {
                return Err(Error::NodeOutOfRange { id: id as usize, num_nodes: self.num_nodes });
            }
        }
        self.arcs.push((u, v, w));
        if !self.directed && u != v {
            self.arcs.push((v, u, w));
        }
        Ok(())
    }

    pub fn build(self) -> Graph {
        let n = self.num_nodes;
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in &self.arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0; self.arcs.len()];
        let mut weights = if self.weighted { Some(vec![0.0; self.arcs.len()]) } else { None };
        for &(u, v, w) in &self.arcs {
            let slot = &mut cursor[u as usize];
            targets[*slot] = v;
            if let Some(ws) = weights.as_mut() {
                ws[*slot] = w;
            }
            *slot += 1;
        }
        Graph { offsets, targets, weights, directed: self.directed }
    }
}

/// Loads a tab-separated edge list: `src<TAB>dst[<TAB>weight]` per line,
/// `#` comments and blank lines skipped. Node count is `max_id + 1`.
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges: Vec<(NodeId, NodeId, Option<f64>)> = Vec::new();
    let mut max_id: Option<NodeId> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(src), Some(dst)) = (fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected `src<TAB>dst[<TAB>weight]`"));
        };
        let parse_id = |s: &str| {
            s.parse::<NodeId>()
                .map_err(|_| Error::parse(path, lineno, format!("`{s}` is not a nonnegative integer node id")))
        };
        let (u, v) = (parse_id(src)?, parse_id(dst)?);
        let weight = match fields.next() {
            None => None,
            Some(w) => {
                let w: f64 =
                    w.parse().map_err(|_| Error::parse(path, lineno, format!("`{w}` is not a number")))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::parse(path, lineno, format!("weight {w} must be finite and nonnegative")));
                }
                Some(w)
            }
        };
        if fields.next().is_some() {
            return Err(Error::parse(path, lineno, "too many fields"));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, weight));
    }
    let Some(max_id) = max_id else {
        return Err(Error::EmptyInput(path.to_path_buf()));
    };
    let weighted = edges.iter().any(|e| e.2.is_some());
    let mut builder = GraphBuilder::new(max_id as usize + 1, directed);
    for (u, v, w) in edges {
        if weighted {
            builder.add_weighted_edge(u, v, w.unwrap_or(1.0))?;
        } else {
            builder.add_edge(u, v)?;
        }
    }
    Ok(builder.build())
}

/// Writes the graph in the format [`load_edge_list`] reads. Undirected
/// graphs emit each arc pair once.
pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        for u in 0..g.num_nodes() as NodeId {
            let ws = g.neighbor_weights(u);
            for (k, &v) in g.neighbors(u).iter().enumerate() {
                if !g.is_directed() && v < u {
                    continue;
                }
                match ws {
                    Some(ws) => writeln!(out, "{u}\t{v}\t{}", ws[k])?,
                    None => writeln!(out, "{u}\t{v}")?,
                }
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Per-node class sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTable {
    labels: Vec<Vec<u32>>,
    num_classes: usize,
}

impl LabelTable {
    /// `labels[i]` is the class set of node `i`; duplicates are removed.
    pub fn new(mut labels: Vec<Vec<u32>>, num_classes: usize) -> Result<Self> {
        for set in &mut labels {
            set.sort_unstable();
            set.dedup();
            if let Some(&c) = set.last() {
                if c as usize >= num_classes {
                    return Err(Error::config(format!("class id {c} not below num_classes {num_classes}")));
                }
            }
        }
        Ok(LabelTable { labels, num_classes })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self, node: usize) -> &[u32] {
        &self.labels[node]
    }

    /// Number of labels carried by `node` (the `k_i` of top-k prediction).
    pub fn k(&self, node: usize) -> usize {
        self.labels[node].len()
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| !self.labels[i].is_empty()).collect()
    }

    pub fn padded_to(&self, n: usize) -> LabelTable {
        let mut labels = self.labels.clone();
        if labels.len() < n {
            labels.resize(n, Vec::new());
        }
        LabelTable { labels, num_classes: self.num_classes }
    }
}

/// Loads `node_id<TAB>class[,class...]` lines. Nodes not listed get an empty
/// label set; a node listed twice gets the union.
pub fn load_labels(path: impl AsRef<Path>, num_nodes: usize) -> Result<LabelTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels = vec![Vec::new(); num_nodes];
    let mut max_class: Option<u32> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(node), Some(classes), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected `node_id<TAB>class[,class...]`"));
        };
        let node: usize = node
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("`{node}` is not a nonnegative integer node id")))?;
        if node >= num_nodes {
            return Err(Error::parse(
                path,
                lineno,
                format!("node id {node} out of range for a graph with {num_nodes} nodes"),
            ));
        }
        for class in classes.split(',') {
            let c: u32 = class
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("`{class}` is not a nonnegative integer class id")))?;
            max_class = Some(max_class.map_or(c, |m| m.max(c)));
            labels[node].push(c);
        }
    }
    let num_classes = max_class.map_or(0, |m| m as usize + 1);
    LabelTable::new(labels, num_classes)
}

/// Largest node id referenced by a label file, without loading the table.
pub fn max_label_node(path: impl AsRef<Path>) -> Result<Option<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut max = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split_whitespace().next().unwrap_or("");
        let node: usize =
            field.parse().map_err(|_| Error::parse(path, i + 1, format!("`{field}` is not a node id")))?;
        max = Some(max.map_or(node, |m: usize| m.max(node)));
    }
    Ok(max)
}

/// Optional sidecar mapping dense ids back to external names:
/// `name<TAB>node_id` per line.
#[derive(Debug, Clone, Default)]
pub struct NameMap {
    names: Vec<Option<String>>,
}

impl NameMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut names: Vec<Option<String>> = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, id)) = line.rsplit_once('\t') else {
                return Err(Error::parse(path, i + 1, "expected `name<TAB>node_id`"));
            };
            let id: usize =
                id.trim().parse().map_err(|_| Error::parse(path, i + 1, format!("`{id}` is not a node id")))?;
            if names.len() <= id {
                names.resize(id + 1, None);
            }
            names[id] = Some(name.to_string());
        }
        Ok(NameMap { names })
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        self.names.get(id as usize).and_then(|n| n.as_deref())
    }
}

/// Number of weakly connected components (arc direction ignored).
pub fn connected_components(g: &Graph) -> usize {
    let n = g.num_nodes();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            let p = parent[x as usize];
            parent[x as usize] = parent[p as usize];
            x = p;
        }
        x
    }
    let mut components = n;
    for (u, v) in g.arcs() {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru.max(rv) as usize] = ru.min(rv);
            components -= 1;
        }
    }
    components
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub classes: usize,
}

impl DatasetStats {
    pub fn compute(g: &Graph, labels: Option<&LabelTable>) -> Self {
        DatasetStats {
            nodes: g.num_nodes(),
            edges: g.edge_count(),
            components: connected_components(g),
            classes: labels.map_or(0, |l| l.num_classes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_directed_line() {
        let f = write_tmp("0\t1\n");
        let g = load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_arcs(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("a\tb\n");
        match load_edge_list(f.path(), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("# header\n0\t1\n2\n");
        assert!(matches!(load_edge_list(f.path(), false), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn negative_weight_and_empty_file() {
        let f = write_tmp("0\t1\t-2.0\n");
        assert!(matches!(load_edge_list(f.path(), false), Err(Error::Parse { line: 1, .. })));
        let f = write_tmp("# only a comment\n\n");
        assert!(matches!(load_edge_list(f.path(), false), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn undirected_lines_make_arc_pairs_and_keep_duplicates() {
        let f = write_tmp("0\t1\n0\t1\n2\t2\n");
        let g = load_edge_list(f.path(), false).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_arcs(), 5);
        assert_eq!(g.neighbors(0), &[1, 1]);
        assert_eq!(g.neighbors(2), &[2]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn weights_are_loaded() {
        let f = write_tmp("0\t1\t2.5\n1\t2\n");
        let g = load_edge_list(f.path(), true).unwrap();
        assert_eq!(g.neighbor_weights(0), Some(&[2.5][..]));
        assert_eq!(g.neighbor_weights(1), Some(&[1.0][..]));
    }

    #[test]
    fn labels_single_and_multi() {
        let f = write_tmp("0\t2\n");
        let t = load_labels(f.path(), 3).unwrap();
        assert_eq!(t.labels(0), &[2]);
        assert!(t.labels(1).is_empty() && t.labels(2).is_empty());
        assert_eq!(t.k(0), 1);

        let f = write_tmp("5\t1,3\n");
        let t = load_labels(f.path(), 6).unwrap();
        assert_eq!(t.labels(5), &[1, 3]);
        assert_eq!(t.k(5), 2);
        assert_eq!(t.num_classes(), 4);
    }

    #[test]
    fn labels_errors() {
        let f = write_tmp("9\t0\n");
        assert!(matches!(load_labels(f.path(), 5), Err(Error::Parse { line: 1, .. })));
        let f = write_tmp("1\tx\n");
        assert!(load_labels(f.path(), 5).is_err());
        let f = write_tmp("1\t-1\n");
        assert!(load_labels(f.path(), 5).is_err());
    }

    #[test]
    fn degrees() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], false).unwrap();
        assert_eq!(star.out_degree(0).unwrap(), 3);
        let path = Graph::from_edges(4, &[(0, 1), (1, 2)], false).unwrap();
        assert_eq!(path.out_degree(1).unwrap(), 2);
        assert_eq!(path.out_degree(3).unwrap(), 0);
        assert!(matches!(path.out_degree(4), Err(Error::NodeOutOfRange { id: 4, .. })));
    }

    #[test]
    fn components_of_edgeless_graph() {
        let g = Graph::from_edges(4, &[], false).unwrap();
        assert_eq!(connected_components(&g), 4);
        let g = Graph::from_edges(4, &[(0, 1), (3, 2)], true).unwrap();
        assert_eq!(connected_components(&g), 2);
    }

    #[test]
    fn transpose_of_directed_path() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], true).unwrap();
        let (off, src) = g.transpose();
        assert_eq!(off, vec![0, 0, 1, 3]);
        assert_eq!(&src[1..3], &[0, 1]);
    }

    #[test]
    fn name_map_lookup() {
        let f = write_tmp("doc_a\t0\ndoc b\t2\n");
        let m = NameMap::load(f.path()).unwrap();
        assert_eq!(m.name(0), Some("doc_a"));
        assert_eq!(m.name(1), None);
        assert_eq!(m.name(2), Some("doc b"));
    }
}
