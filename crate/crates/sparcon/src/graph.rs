//! Attributed graphs: symmetric binary adjacency plus a dense attribute
//! matrix, with the text formats used by every command.
//!
//! Formats: edges are one `src<TAB>dst` pair per line with 0-based ids
//! (loading accepts any whitespace); attributes are a headerless CSV with
//! one row per node; labels are a `node_id,label` CSV with label 0 normal,
//! 1 structural anomaly, 2 attribute anomaly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;

pub type NodeId = usize;

/// Symmetric binary adjacency stored as per-node sorted neighbor lists.
/// No self-loops; self-loops only ever appear inside GCN normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            neighbors: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut adj = Adjacency::new(n);
        for (u, v) in edges {
            adj.check_node(u)?;
            adj.check_node(v)?;
            if u != v {
                adj.add_edge(u, v);
            }
        }
        Ok(adj)
    }

    fn check_node(&self, u: NodeId) -> Result<()> {
        if u >= self.n() {
            return Err(Error::MalformedInput(format!(
                "node id {u} out of range for {} nodes",
                self.n()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    /// Undirected edge count.
    pub fn m(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.neighbors[u].len()
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.neighbors[u]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Insert the undirected edge {u, v}; returns false if it already
    /// existed. Self-loops are rejected by the callers that mutate graphs.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        assert_ne!(u, v, "self-loops are not stored");
        match self.neighbors[u].binary_search(&v) {
            Ok(_) => false,
            Err(pos_u) => {
                self.neighbors[u].insert(pos_u, v);
                let pos_v = self.neighbors[v]
                    .binary_search(&u)
                    .expect_err("adjacency lost symmetry");
                self.neighbors[v].insert(pos_v, u);
                self.edge_count += 1;
                true
            }
        }
    }

    /// Every undirected edge once, with u < v.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.neighbors.iter().enumerate().all(|(u, nbrs)| {
            nbrs.iter()
                .all(|&v| v != u && self.neighbors[v].binary_search(&u).is_ok())
        })
    }
}

/// Attributed network: adjacency + dense attribute matrix X (n×f).
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    adjacency: Adjacency,
    attributes: Mat,
}

impl AttributedGraph {
    pub fn new(adjacency: Adjacency, attributes: Mat) -> Result<Self> {
        if adjacency.n() != attributes.rows() {
            return Err(Error::MalformedInput(format!(
                "adjacency has {} nodes but attribute matrix has {} rows",
                adjacency.n(),
                attributes.rows()
            )));
        }
        if !attributes.all_finite() {
            return Err(Error::MalformedInput(
                "attribute matrix contains non-finite values".into(),
            ));
        }
        Ok(AttributedGraph {
            adjacency,
            attributes,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn m(&self) -> usize {
        self.adjacency.m()
    }

    /// Attribute dimension.
    pub fn f(&self) -> usize {
        self.attributes.cols()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn attributes(&self) -> &Mat {
        &self.attributes
    }

    pub fn attr_row(&self, u: NodeId) -> &[f64] {
        self.attributes.row(u)
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        self.adjacency.neighbors(u)
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency.degree(u)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Adjacency, &mut Mat) {
        (&mut self.adjacency, &mut self.attributes)
    }
}

/// Per-node anomaly class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeLabel {
    Normal,
    Structural,
    Attribute,
}

impl NodeLabel {
    pub fn code(self) -> u8 {
        match self {
            NodeLabel::Normal => 0,
            NodeLabel::Structural => 1,
            NodeLabel::Attribute => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(NodeLabel::Normal),
            1 => Some(NodeLabel::Structural),
            2 => Some(NodeLabel::Attribute),
            _ => None,
        }
    }
}

/// Ground-truth labels produced by anomaly injection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnomalyLabels {
    labels: Vec<NodeLabel>,
}

impl AnomalyLabels {
    pub fn normal(n: usize) -> Self {
        AnomalyLabels {
            labels: vec![NodeLabel::Normal; n],
        }
    }

    pub fn from_labels(labels: Vec<NodeLabel>) -> Self {
        AnomalyLabels { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, u: NodeId) -> NodeLabel {
        self.labels[u]
    }

    pub fn set(&mut self, u: NodeId, l: NodeLabel) {
        self.labels[u] = l;
    }

    /// Binary view: y_i = 1 for either anomaly type.
    pub fn is_anomaly(&self, u: NodeId) -> bool {
        self.labels[u] != NodeLabel::Normal
    }

    pub fn binary(&self) -> Vec<bool> {
        self.labels
            .iter()
            .map(|&l| l != NodeLabel::Normal)
            .collect()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l != NodeLabel::Normal)
            .count()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeLabel> + '_ {
        self.labels.iter().copied()
    }
}

/// Counters reported by `load_graph` for lines it had to repair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Self-loop lines dropped with a warning.
    pub self_loops_dropped: usize,
    /// Duplicate or reversed edge lines collapsed into one undirected edge.
    pub duplicates_dropped: usize,
}

/// Load an attributed graph from an edge list and an attribute CSV.
///
/// The attribute row count fixes n; any edge endpoint ≥ n is rejected.
pub fn load_graph(
    edges_path: impl AsRef<Path>,
    attrs_path: impl AsRef<Path>,
) -> Result<(AttributedGraph, LoadStats)> {
    let attributes = load_attrs(attrs_path)?;
    let n = attributes.rows();

    let edges_path = edges_path.as_ref();
    let text = fs::read_to_string(edges_path).map_err(|e| Error::io(edges_path, e))?;

    let mut adjacency = Adjacency::new(n);
    let mut stats = LoadStats::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (su, sv) = match (it.next(), it.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::parse(
                    edges_path,
                    lineno + 1,
                    format!("expected 'src dst', got {line:?}"),
                ))
            }
        };
        let u: NodeId = su
            .parse()
            .map_err(|_| Error::parse(edges_path, lineno + 1, format!("bad node id {su:?}")))?;
        let v: NodeId = sv
            .parse()
            .map_err(|_| Error::parse(edges_path, lineno + 1, format!("bad node id {sv:?}")))?;
        if u >= n || v >= n {
            return Err(Error::MalformedInput(format!(
                "{}:{}: edge ({u}, {v}) references a node ≥ {n} (attribute rows imply n = {n})",
                edges_path.display(),
                lineno + 1
            )));
        }
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        if !adjacency.add_edge(u, v) {
            stats.duplicates_dropped += 1;
        }
    }

    Ok((AttributedGraph::new(adjacency, attributes)?, stats))
}

/// Headerless CSV of n rows × f floats.
pub fn load_attrs(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut this_row = 0usize;
        for (colno, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(
                    path,
                    lineno + 1,
                    format!(
                        "non-numeric attribute cell {:?} at column {}",
                        cell.trim(),
                        colno + 1
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("non-finite attribute at column {}", colno + 1),
                ));
            }
            data.push(v);
            this_row += 1;
        }
        match cols {
            None => cols = Some(this_row),
            Some(f) if f != this_row => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("row has {this_row} columns, expected {f}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| {
        Error::MalformedInput(format!("{}: empty attribute file", path.display()))
    })?;
    Ok(Mat::from_vec(rows, cols, data))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<AnomalyLabels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("node_id") {
            continue;
        }
        let mut it = line.split(',');
        let (sid, slab) = match (it.next(), it.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => return Err(Error::parse(path, lineno + 1, "expected 'node_id,label'")),
        };
        let id: NodeId = sid
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, format!("bad node id {sid:?}")))?;
        let code: u8 = slab
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, format!("bad label {slab:?}")))?;
        let label = NodeLabel::from_code(code).ok_or_else(|| {
            Error::parse(path, lineno + 1, format!("label {code} not in {{0,1,2}}"))
        })?;
        pairs.push((id, label));
    }
    let n = pairs.len();
    let mut labels = vec![NodeLabel::Normal; n];
    for (id, label) in pairs {
        if id >= n {
            return Err(Error::MalformedInput(format!(
                "{}: node id {id} out of range for {n} label rows",
                path.display()
            )));
        }
        labels[id] = label;
    }
    Ok(AnomalyLabels::from_labels(labels))
}

pub fn save_edges(path: impl AsRef<Path>, adjacency: &Adjacency) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (u, v) in adjacency.edges() {
        let _ = writeln!(out, "{u}\t{v}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn save_attrs(path: impl AsRef<Path>, attrs: &Mat) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in 0..attrs.rows() {
        let row = attrs.row(r);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn save_labels(path: impl AsRef<Path>, labels: &AnomalyLabels) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("node_id,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i, l.code());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
