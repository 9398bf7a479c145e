//! Heaviest-subgraph extraction and maximum-likelihood partitioning on
//! signed query graphs.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{Clustering, SignedGraph};

/// Solver limits for the signed-graph subroutines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverLimits {
    /// Largest graph solved exactly by branch and bound.
    pub exact_subgraph_limit: usize,
    /// Largest graph partitioned exactly.
    pub exact_partition_limit: usize,
    /// Seeds tried by the local-search heuristic.
    pub restarts: usize,
    /// Moves per local-search run.
    pub move_budget: usize,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits { exact_subgraph_limit: 20, exact_partition_limit: 10, restarts: 8, move_budget: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Exact,
    Heuristic,
}

/// A vertex subset of a signed graph and its total internal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    /// Local indices, ascending.
    pub local: Vec<usize>,
    /// Global vertex ids, ascending.
    pub vertices: Vec<usize>,
    pub weight: i64,
    pub method: SolveMethod,
}

/// Total weight of the pairs inside `local`.
pub fn subset_weight(g: &SignedGraph, local: &[usize]) -> i64 {
    let mut w = 0i64;
    for (a, &i) in local.iter().enumerate() {
        for &j in &local[a + 1..] {
            w += g.weight_local(i, j) as i64;
        }
    }
    w
}

/// Preference order: weight, then size, then lexicographically smaller ids.
fn better(w: i64, ids: &[usize], best_w: i64, best_ids: &[usize]) -> bool {
    (w, ids.len()) > (best_w, best_ids.len()) || ((w, ids.len()) == (best_w, best_ids.len()) && ids < best_ids)
}

fn sorted_ids(g: &SignedGraph, local: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = local.iter().map(|&i| g.vertices()[i]).collect();
    ids.sort_unstable();
    ids
}

fn finish(g: &SignedGraph, mut local: Vec<usize>, weight: i64, method: SolveMethod) -> Subgraph {
    local.sort_unstable();
    let vertices = sorted_ids(g, &local);
    Subgraph { local, vertices, weight, method }
}

/// Heaviest subgraph: exact below the size limit, local search above it.
pub fn max_weight_subgraph(g: &SignedGraph, limits: &SolverLimits) -> Subgraph {
    if g.len() <= limits.exact_subgraph_limit {
        exact_subgraph(g)
    } else {
        heuristic_subgraph(g, limits)
    }
}

struct Bnb<'a> {
    g: &'a SignedGraph,
    m: usize,
    chosen: Vec<usize>,
    /// `Σ_{u∈I} ω(x, u)` for every vertex.
    gain: Vec<i64>,
    /// Positive edges from `x` to undecided vertices.
    pos_undecided: Vec<i64>,
    best_w: i64,
    best_ids: Vec<usize>,
    best_local: Vec<usize>,
}

impl Bnb<'_> {
    fn go(&mut self, d: usize, cur: i64) {
        if d == self.m {
            let ids = sorted_ids(self.g, &self.chosen);
            if better(cur, &ids, self.best_w, &self.best_ids) {
                self.best_w = cur;
                self.best_ids = ids;
                self.best_local = self.chosen.clone();
            }
            return;
        }
        // Doubled optimistic bound over the undecided vertices d..m.
        let mut bound2 = 2 * cur;
        for x in d..self.m {
            bound2 += (2 * self.gain[x] + self.pos_undecided[x]).max(0);
        }
        if bound2 < 2 * self.best_w {
            return;
        }
        if bound2 == 2 * self.best_w && self.chosen.len() + (self.m - d) < self.best_ids.len() {
            return;
        }
        let g = self.g;
        for x in d + 1..self.m {
            if g.weight_local(x, d) > 0 {
                self.pos_undecided[x] -= 1;
            }
        }
        // include d
        let add = self.gain[d];
        self.chosen.push(d);
        for x in d + 1..self.m {
            self.gain[x] += g.weight_local(x, d) as i64;
        }
        self.go(d + 1, cur + add);
        for x in d + 1..self.m {
            self.gain[x] -= g.weight_local(x, d) as i64;
        }
        self.chosen.pop();
        // exclude d
        self.go(d + 1, cur);
        for x in d + 1..self.m {
            if g.weight_local(x, d) > 0 {
                self.pos_undecided[x] += 1;
            }
        }
    }
}

/// Branch and bound over include/exclude decisions.
pub fn exact_subgraph(g: &SignedGraph) -> Subgraph {
    let m = g.len();
    let pos_undecided = (0..m).map(|x| (0..m).filter(|&y| y != x && g.weight_local(x, y) > 0).count() as i64).collect();
    let mut b = Bnb {
        g,
        m,
        chosen: Vec::new(),
        gain: vec![0; m],
        pos_undecided,
        best_w: 0,
        best_ids: Vec::new(),
        best_local: Vec::new(),
    };
    b.go(0, 0);
    let (local, w) = (b.best_local, b.best_w);
    finish(g, local, w, SolveMethod::Exact)
}

/// Greedy add/remove local search from several positive-degree seeds.
pub fn heuristic_subgraph(g: &SignedGraph, limits: &SolverLimits) -> Subgraph {
    let m = g.len();
    if m == 0 {
        return finish(g, Vec::new(), 0, SolveMethod::Heuristic);
    }
    let ids = g.vertices();
    let mut seeds: Vec<usize> = (0..m).collect();
    let pos_deg: Vec<usize> = (0..m).map(|x| (0..m).filter(|&y| y != x && g.weight_local(x, y) > 0).count()).collect();
    seeds.sort_by(|&a, &b| pos_deg[b].cmp(&pos_deg[a]).then(ids[a].cmp(&ids[b])));
    seeds.truncate(limits.restarts.max(1));

    let mut best: Option<(i64, Vec<usize>, Vec<usize>)> = None;
    for &s in &seeds {
        let mut in_set = vec![false; m];
        let mut gain: Vec<i64> = (0..m).map(|x| if x == s { 0 } else { g.weight_local(x, s) as i64 }).collect();
        in_set[s] = true;
        let mut weight = 0i64;
        for _ in 0..limits.move_budget {
            let mut add: Option<usize> = None;
            let mut drop: Option<usize> = None;
            for x in 0..m {
                if in_set[x] {
                    if drop.is_none_or(|d| gain[x] < gain[d] || (gain[x] == gain[d] && ids[x] < ids[d])) {
                        drop = Some(x);
                    }
                } else if add.is_none_or(|a| gain[x] > gain[a] || (gain[x] == gain[a] && ids[x] < ids[a])) {
                    add = Some(x);
                }
            }
            let step = match (add, drop) {
                (Some(a), _) if gain[a] > 0 => (a, true),
                (_, Some(d)) if gain[d] < 0 => (d, false),
                (Some(a), _) if gain[a] == 0 => (a, true),
                _ => break,
            };
            let (x, adding) = step;
            let sign = if adding { 1 } else { -1 };
            weight += sign * gain[x];
            in_set[x] = adding;
            for y in (0..m).filter(|&y| y != x) {
                gain[y] += sign * g.weight_local(y, x) as i64;
            }
        }
        let local: Vec<usize> = (0..m).filter(|&x| in_set[x]).collect();
        let sorted = sorted_ids(g, &local);
        if best.as_ref().is_none_or(|(bw, bids, _)| better(weight, &sorted, *bw, bids)) {
            best = Some((weight, sorted, local));
        }
    }
    let (w, _, local) = best.expect("at least one seed");
    finish(g, local, w, SolveMethod::Heuristic)
}

/// Sum of intra-cluster weights over unordered pairs.
pub fn ml_objective(g: &SignedGraph, c: &Clustering) -> i64 {
    let a = c.assignment();
    let m = g.len();
    let mut total = 0i64;
    for i in 0..m {
        for j in i + 1..m {
            if a[i] == a[j] {
                total += g.weight_local(i, j) as i64;
            }
        }
    }
    total
}

/// Agreements: `+1` pairs kept together plus `−1` pairs kept apart.
pub fn corrclust_objective(g: &SignedGraph, c: &Clustering) -> i64 {
    let a = c.assignment();
    let m = g.len();
    let mut total = 0i64;
    for i in 0..m {
        for j in i + 1..m {
            let w = g.weight_local(i, j);
            if (w > 0 && a[i] == a[j]) || (w < 0 && a[i] != a[j]) {
                total += 1;
            }
        }
    }
    total
}

/// Partition of a signed graph maximizing [`ml_objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlEstimate {
    /// Partition over local indices.
    pub local: Clustering,
    /// The same partition as global vertex ids.
    pub clusters: Vec<Vec<usize>>,
    pub objective: i64,
    pub method: SolveMethod,
}

/// Exact search over set partitions for small graphs; repeated heaviest
/// subgraph peeling otherwise.
pub fn ml_estimate(g: &SignedGraph, limits: &SolverLimits) -> Result<MlEstimate> {
    let m = g.len();
    let (assignment, method) = if m <= limits.exact_partition_limit {
        (exact_partition(g), SolveMethod::Exact)
    } else {
        (peel_partition(g, limits), SolveMethod::Heuristic)
    };
    let local = Clustering::from_labels(&assignment);
    let clusters = local.clusters().iter().map(|c| c.iter().map(|&i| g.vertices()[i]).collect()).collect();
    let objective = ml_objective(g, &local);
    Ok(MlEstimate { local, clusters, objective, method })
}

fn exact_partition(g: &SignedGraph) -> Vec<usize> {
    let m = g.len();
    // Optimistic remainder: positive edges from each later vertex to all earlier ones.
    let mut suffix = vec![0i64; m + 1];
    for i in (0..m).rev() {
        let pos = (0..i).filter(|&j| g.weight_local(i, j) > 0).count() as i64;
        suffix[i] = suffix[i + 1] + pos;
    }
    struct Search<'a> {
        g: &'a SignedGraph,
        m: usize,
        suffix: Vec<i64>,
        blocks: Vec<usize>,
        best: i64,
        best_blocks: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, used: usize, cur: i64) {
            if cur + self.suffix[i] < self.best {
                return;
            }
            if i == self.m {
                if cur > self.best {
                    self.best = cur;
                    self.best_blocks = self.blocks.clone();
                }
                return;
            }
            for b in 0..=used {
                let delta: i64 =
                    (0..i).filter(|&j| self.blocks[j] == b).map(|j| self.g.weight_local(i, j) as i64).sum();
                self.blocks.push(b);
                self.go(i + 1, used.max(b + 1), cur + delta);
                self.blocks.pop();
            }
        }
    }
    let mut s = Search { g, m, suffix, blocks: Vec::new(), best: i64::MIN, best_blocks: Vec::new() };
    s.go(0, 0, 0);
    s.best_blocks
}

fn peel_partition(g: &SignedGraph, limits: &SolverLimits) -> Vec<usize> {
    let m = g.len();
    let mut assignment = vec![usize::MAX; m];
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut next = 0;
    while !remaining.is_empty() {
        let sub = g.induced(&remaining);
        let s = max_weight_subgraph(&sub, limits);
        if s.weight <= 0 || s.local.len() < 2 {
            break;
        }
        for &i in &s.local {
            assignment[remaining[i]] = next;
        }
        next += 1;
        let keep: Vec<usize> = (0..remaining.len()).filter(|i| !s.local.contains(i)).map(|i| remaining[i]).collect();
        remaining = keep;
    }
    for i in remaining {
        assignment[i] = next;
        next += 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(m: usize, seed: u64, p_pos: f64) -> SignedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![vec![0i8; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                w[i][j] = if rng.gen::<f64>() < p_pos { 1 } else { -1 };
            }
        }
        SignedGraph::complete(m, |i, j| w[i][j])
    }

    /// Brute force over all subsets with the same preference order.
    fn brute_subgraph(g: &SignedGraph) -> (i64, Vec<usize>) {
        let m = g.len();
        let mut best = (i64::MIN, Vec::new());
        for mask in 0u32..(1 << m) {
            let local: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
            let w = subset_weight(g, &local);
            let ids = sorted_ids(g, &local);
            if better(w, &ids, best.0, &best.1) {
                best = (w, ids);
            }
        }
        best
    }

    /// All set partitions by choosing the block of the first remaining element.
    fn brute_partition_best(g: &SignedGraph) -> i64 {
        fn rec(g: &SignedGraph, rest: &[usize], acc: i64, best: &mut i64) {
            if rest.is_empty() {
                *best = (*best).max(acc);
                return;
            }
            let first = rest[0];
            let others = &rest[1..];
            for mask in 0u32..(1 << others.len()) {
                let mut block = vec![first];
                let mut remain = Vec::new();
                for (b, &x) in others.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        block.push(x);
                    } else {
                        remain.push(x);
                    }
                }
                rec(g, &remain, acc + subset_weight(g, &block), best);
            }
        }
        let mut best = i64::MIN;
        rec(g, &(0..g.len()).collect::<Vec<_>>(), 0, &mut best);
        best
    }

    #[test]
    fn subgraph_examples() {
        let all_pos = SignedGraph::complete(4, |_, _| 1);
        let s = exact_subgraph(&all_pos);
        assert_eq!((s.weight, s.local.len()), (6, 4));
        let all_neg = SignedGraph::complete(4, |_, _| -1);
        let s = exact_subgraph(&all_neg);
        assert_eq!((s.weight, s.local.len()), (0, 1));
        assert_eq!(s.vertices, vec![0]);
        // two positive triangles joined by negative edges
        let two = SignedGraph::complete(6, |i, j| if (i < 3) == (j < 3) { 1 } else { -1 });
        let s = exact_subgraph(&two);
        assert_eq!((s.weight, s.vertices.clone()), (3, vec![0, 1, 2]));
        assert_eq!(exact_subgraph(&SignedGraph::new()).weight, 0);
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..300u64 {
            let m = 1 + (seed % 12) as usize;
            let g = random_graph(m, seed, 0.3 + 0.4 * ((seed % 5) as f64 / 4.0));
            let s = exact_subgraph(&g);
            let (bw, bids) = brute_subgraph(&g);
            assert_eq!((s.weight, &s.vertices), (bw, &bids), "seed {seed}");
            assert_eq!(subset_weight(&g, &s.local), s.weight);
        }
    }

    #[test]
    fn heuristic_is_consistent_and_close() {
        for seed in 0..40u64 {
            let g = random_graph(14, seed, 0.5);
            let h = heuristic_subgraph(&g, &SolverLimits::default());
            assert_eq!(subset_weight(&g, &h.local), h.weight);
            assert!(h.weight <= exact_subgraph(&g).weight);
        }
        // planted clique is recovered by local search
        let g = SignedGraph::complete(40, |i, j| if i < 15 && j < 15 { 1 } else { -1 });
        let h = heuristic_subgraph(&g, &SolverLimits::default());
        assert_eq!(h.local, (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn partition_matches_brute_force() {
        for seed in 0..300u64 {
            let m = 1 + (seed % 8) as usize;
            let g = random_graph(m, 1000 + seed, 0.5);
            let est = ml_estimate(&g, &SolverLimits::default()).unwrap();
            assert_eq!(est.method, SolveMethod::Exact);
            assert_eq!(est.objective, brute_partition_best(&g), "seed {seed}");
        }
    }

    #[test]
    fn objectives_relate() {
        let g = random_graph(9, 7, 0.5);
        let est = ml_estimate(&g, &SolverLimits::default()).unwrap();
        let neg = g.negative_pairs() as i64;
        assert_eq!(corrclust_objective(&g, &est.local), est.objective + neg);
    }

    #[test]
    fn peeling_recovers_planted_blocks() {
        let g = SignedGraph::complete(30, |i, j| if i / 10 == j / 10 { 1 } else { -1 });
        let est = ml_estimate(&g, &SolverLimits::default()).unwrap();
        assert_eq!(est.method, SolveMethod::Heuristic);
        assert_eq!(est.local.num_clusters(), 3);
        assert_eq!(est.objective, 3 * 45);
    }

    proptest! {
        #[test]
        fn corrclust_identity(m in 1usize..9, seed in 0u64..1000, labels in prop::collection::vec(0usize..4, 9)) {
            let g = random_graph(m, seed, 0.5);
            let c = Clustering::from_labels(&labels[..m]);
            prop_assert_eq!(corrclust_objective(&g, &c), ml_objective(&g, &c) + g.negative_pairs() as i64);
        }
    }
}
