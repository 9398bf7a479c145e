//! Shared domain types: ground-truth instances, clusterings, signed query
//! graphs, query ledgers and run reports.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::SizeProfile;

/// Unordered vertex pair stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair(usize, usize);

impl Pair {
    pub fn new(u: usize, v: usize) -> Self {
        if u <= v {
            Pair(u, v)
        } else {
            Pair(v, u)
        }
    }

    pub fn lo(self) -> usize {
        self.0
    }

    pub fn hi(self) -> usize {
        self.1
    }

    /// Position of the pair in the row-major lower triangle.
    pub fn triangle_index(self) -> u64 {
        let (lo, hi) = (self.0 as u64, self.1 as u64);
        hi * hi.saturating_sub(1) / 2 + lo
    }
}

/// Hidden ground truth: a partition of `n` vertices into `k` clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub k: usize,
    pub labels: Vec<usize>,
    pub size_profile: SizeProfile,
    pub seed: u64,
}

impl Instance {
    pub fn new(labels: Vec<usize>, k: usize, size_profile: SizeProfile, seed: u64) -> Result<Self> {
        let n = labels.len();
        if k == 0 || k > n {
            return Err(Error::InvalidPartition(format!("k = {k} with n = {n}")));
        }
        let mut seen = vec![false; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::InvalidPartition(format!("label {l} outside [0, {k})")));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("cluster {missing} is empty")));
        }
        Ok(Instance { n, k, labels, size_profile, seed })
    }

    /// Re-checks the invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.n {
            return Err(Error::VertexCountMismatch { found: self.labels.len(), expected: self.n });
        }
        Instance::new(self.labels.clone(), self.k, self.size_profile.clone(), self.seed).map(|_| ())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l].push(v);
        }
        out
    }

    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    pub fn as_clustering(&self) -> Clustering {
        Clustering::from_labels(&self.labels)
    }
}

/// An algorithm's output partition; cluster ids are dense from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    assignment: Vec<usize>,
}

impl Clustering {
    /// Relabels arbitrary labels densely in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Clustering { assignment }
    }

    /// Builds a clustering of `n` vertices from explicit clusters; each vertex
    /// must appear in exactly one non-empty cluster.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        let mut id = 0;
        for c in clusters {
            if c.is_empty() {
                continue;
            }
            for &v in c {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if assignment[v] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("vertex {v} assigned twice")));
                }
                assignment[v] = id;
            }
            id += 1;
        }
        if let Some(v) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidPartition(format!("vertex {v} unassigned")));
        }
        Ok(Clustering { assignment })
    }

    /// Validates a dense assignment (ids `0..m`, none empty).
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let m = assignment.iter().copied().max().map_or(0, |x| x + 1);
        let mut seen = vec![false; m];
        for &a in &assignment {
            seen[a] = true;
        }
        if let Some(e) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("cluster id {e} is empty")));
        }
        Ok(Clustering { assignment })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.assignment.iter().copied().max().map_or(0, |x| x + 1)
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// Canonical labels: clusters numbered by their minimum vertex id.
    pub fn canonical(&self) -> Vec<usize> {
        Clustering::from_labels(&self.assignment).assignment
    }
}

/// Compares a found clustering with the ground truth.
///
/// Returns whether the partitions are identical up to relabeling, and the
/// fraction of truth clusters with at least `size_threshold` members that
/// appear verbatim in `found` (1.0 when no truth cluster is that large).
pub fn compare_clusterings(found: &Clustering, truth: &Instance, size_threshold: usize) -> Result<(bool, f64)> {
    if found.n() != truth.n {
        return Err(Error::VertexCountMismatch { found: found.n(), expected: truth.n });
    }
    let exact = found.canonical() == Clustering::from_labels(&truth.labels).assignment;
    let found_sizes = {
        let mut s = vec![0usize; found.num_clusters()];
        for &c in found.assignment() {
            s[c] += 1;
        }
        s
    };
    let mut big = 0usize;
    let mut hit = 0usize;
    for cluster in truth.clusters() {
        if cluster.len() < size_threshold {
            continue;
        }
        big += 1;
        let id = found.assignment()[cluster[0]];
        if found_sizes[id] == cluster.len() && cluster.iter().all(|&v| found.assignment()[v] == id) {
            hit += 1;
        }
    }
    let recall = if big == 0 { 1.0 } else { hit as f64 / big as f64 };
    Ok((exact, recall))
}

/// Answer of a same-cluster query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Same,
    Different,
}

impl Answer {
    pub fn from_same(same: bool) -> Self {
        if same {
            Answer::Same
        } else {
            Answer::Different
        }
    }

    pub fn is_same(self) -> bool {
        self == Answer::Same
    }

    /// `+1` for [`Answer::Same`], `-1` otherwise.
    pub fn sign(self) -> i8 {
        match self {
            Answer::Same => 1,
            Answer::Different => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Answer::Same => Answer::Different,
            Answer::Different => Answer::Same,
        }
    }
}

/// Graph over a vertex subset with `±1` weights on queried pairs.
///
/// Weights are held in a dense local matrix; `0` marks an absent pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignedGraph {
    vertices: Vec<usize>,
    weights: Vec<Vec<i8>>,
}

impl SignedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on `vertices` with no edges.
    pub fn with_vertices(vertices: Vec<usize>) -> Result<Self> {
        let mut seen = HashSet::new();
        for &v in &vertices {
            if !seen.insert(v) {
                return Err(Error::InvalidParameter(format!("duplicate vertex {v}")));
            }
        }
        let m = vertices.len();
        Ok(SignedGraph { vertices, weights: vec![vec![0; m]; m] })
    }

    /// Complete graph on `0..m` from a local weight matrix (upper triangle used).
    pub fn complete(m: usize, weight: impl Fn(usize, usize) -> i8) -> Self {
        let mut g = SignedGraph::with_vertices((0..m).collect()).expect("distinct");
        for i in 0..m {
            for j in i + 1..m {
                g.set_local(i, j, weight(i, j));
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn local_index(&self, vertex: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == vertex)
    }

    /// Appends a vertex and returns its local index.
    pub fn add_vertex(&mut self, vertex: usize) -> usize {
        debug_assert!(self.local_index(vertex).is_none());
        for row in &mut self.weights {
            row.push(0);
        }
        self.vertices.push(vertex);
        self.weights.push(vec![0; self.vertices.len()]);
        self.vertices.len() - 1
    }

    /// Sets the weight between two local indices. `w` must be `-1`, `0` or `+1`.
    pub fn set_local(&mut self, i: usize, j: usize, w: i8) {
        assert!(i != j, "no self-loops");
        assert!((-1..=1).contains(&w));
        self.weights[i][j] = w;
        self.weights[j][i] = w;
    }

    pub fn set(&mut self, u: usize, v: usize, w: i8) -> Result<()> {
        let i = self.local_index(u).ok_or(Error::InvalidParameter(format!("vertex {u} not in graph")))?;
        let j = self.local_index(v).ok_or(Error::InvalidParameter(format!("vertex {v} not in graph")))?;
        if i == j {
            return Err(Error::SelfQuery(u));
        }
        self.set_local(i, j, w);
        Ok(())
    }

    #[inline]
    pub fn weight_local(&self, i: usize, j: usize) -> i8 {
        self.weights[i][j]
    }

    pub fn weight(&self, u: usize, v: usize) -> i8 {
        match (self.local_index(u), self.local_index(v)) {
            (Some(i), Some(j)) if i != j => self.weights[i][j],
            _ => 0,
        }
    }

    /// Drops the vertices at the given local indices.
    pub fn remove_local(&mut self, drop: &[usize]) {
        let mut keep = vec![true; self.len()];
        for &i in drop {
            keep[i] = false;
        }
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep[i]).collect();
        self.vertices = idx.iter().map(|&i| self.vertices[i]).collect();
        self.weights = idx.iter().map(|&i| idx.iter().map(|&j| self.weights[i][j]).collect()).collect();
    }

    /// Induced subgraph on local indices.
    pub fn induced(&self, local: &[usize]) -> SignedGraph {
        SignedGraph {
            vertices: local.iter().map(|&i| self.vertices[i]).collect(),
            weights: local.iter().map(|&i| local.iter().map(|&j| self.weights[i][j]).collect()).collect(),
        }
    }

    /// Number of present pairs with weight `-1`.
    pub fn negative_pairs(&self) -> usize {
        let m = self.len();
        (0..m).map(|i| (i + 1..m).filter(|&j| self.weights[i][j] < 0).count()).sum()
    }
}

/// Distinct pairs asked and rounds consumed by one oracle session.
#[derive(Debug, Clone, Default)]
pub struct QueryLedger {
    asked: HashSet<Pair>,
    round_count: usize,
    per_round_sizes: Vec<usize>,
}

/// Serialized form of a [`QueryLedger`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerExport {
    pub query_count: usize,
    pub round_count: usize,
    pub per_round_sizes: Vec<usize>,
}

impl QueryLedger {
    /// Records a pair; returns `true` on the first ask.
    pub fn record(&mut self, pair: Pair) -> bool {
        self.asked.insert(pair)
    }

    pub fn record_round(&mut self, size: usize) {
        self.round_count += 1;
        self.per_round_sizes.push(size);
    }

    pub fn contains(&self, pair: Pair) -> bool {
        self.asked.contains(&pair)
    }

    pub fn query_count(&self) -> usize {
        self.asked.len()
    }

    pub fn round_count(&self) -> usize {
        self.round_count
    }

    pub fn per_round_sizes(&self) -> &[usize] {
        &self.per_round_sizes
    }

    pub fn export(&self) -> LedgerExport {
        LedgerExport {
            query_count: self.query_count(),
            round_count: self.round_count,
            per_round_sizes: self.per_round_sizes.clone(),
        }
    }
}

/// Cost and accuracy record of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
    pub query_count: usize,
    pub round_count: usize,
    pub exact_recovery: bool,
    pub big_cluster_recall: f64,
    /// `None` when no lower-bound formula applies or it is infinite.
    pub bound_ratio: Option<f64>,
    pub wall_time: f64,
    /// Hard-assert violations observed during the run.
    #[serde(default)]
    pub violations: Vec<String>,
}
