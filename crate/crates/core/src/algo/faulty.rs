//! Algorithms for a faulty oracle that flips each answer with probability `p`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::membership::{MembershipScorer, MembershipTable};
use super::select::{dyadic_candidates, ranked, select_vertex};
use super::subgraph::{max_weight_subgraph, ml_estimate, SolveMethod, SolverLimits};
use super::{Outcome, RunStats};
use crate::error::{Error, Result};
use crate::oracle::{OracleMode, OracleSession};
use crate::stats::{ceil_count, faulty_constants};
use crate::synth::SideInfoMatrix;
use crate::types::{Clustering, SignedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultyConfig {
    /// `½ − p`, known to the algorithm.
    pub lambda: f64,
    #[serde(default = "one")]
    pub desk_scale: f64,
    #[serde(flatten)]
    pub limits: SolverLimits,
}

fn one() -> f64 {
    1.0
}

impl FaultyConfig {
    pub fn new(lambda: f64, desk_scale: f64) -> Self {
        FaultyConfig { lambda, desk_scale, limits: SolverLimits::default() }
    }

    pub fn validate(&self) -> Result<()> {
        faulty_constants(self.lambda, self.desk_scale)?;
        if self.limits.exact_subgraph_limit < 2 || self.limits.exact_partition_limit < 2 {
            return Err(Error::InvalidParameter("exact solver limits must be at least 2".into()));
        }
        Ok(())
    }

    /// `c = s · 6/λ²`.
    pub fn c(&self) -> Result<f64> {
        Ok(faulty_constants(self.lambda, self.desk_scale)?.0)
    }

    /// Panel size `⌈c ln n⌉`, at least 1.
    pub fn panel(&self, n: usize) -> Result<usize> {
        let ln = (n.max(2) as f64).ln();
        Ok(ceil_count(self.c()? * ln).max(1))
    }
}

fn check_session(session: &OracleSession, cfg: &FaultyConfig) -> Result<()> {
    cfg.validate()?;
    match session.spec().mode {
        OracleMode::Faulty { p } if (0.5 - p - cfg.lambda).abs() < 1e-9 => Ok(()),
        OracleMode::Faulty { p } => {
            Err(Error::InvalidParameter(format!("lambda {} does not match oracle error rate {p}", cfg.lambda)))
        }
        OracleMode::Perfect => Err(Error::WrongOracleMode("this algorithm needs a faulty oracle".into())),
    }
}

/// Shared state: the active list `A` and the query graph `G′`.
struct Engine<'s> {
    session: &'s mut OracleSession,
    panel: usize,
    accept: usize,
    limits: SolverLimits,
    clusters: Vec<Vec<usize>>,
    g: SignedGraph,
    checked: HashSet<(usize, usize)>,
    stats: RunStats,
}

impl<'s> Engine<'s> {
    fn new(session: &'s mut OracleSession, panel: usize, accept: usize, limits: SolverLimits) -> Self {
        let stats = RunStats { threshold: Some(panel), ..RunStats::default() };
        Engine {
            session,
            panel,
            accept,
            limits,
            clusters: Vec::new(),
            g: SignedGraph::new(),
            checked: HashSet::new(),
            stats,
        }
    }

    /// Majority vote of `v` against the first `panel` members of cluster `c`.
    fn vote(&mut self, v: usize, c: usize) -> Result<bool> {
        if !self.checked.insert((v, c)) {
            self.stats.repeated_votes += 1;
        }
        self.stats.panel_votes += 1;
        let size = self.panel.min(self.clusters[c].len());
        let mut yes = 0;
        for i in 0..size {
            let u = self.clusters[c][i];
            if self.session.query(v, u)?.is_same() {
                yes += 1;
            }
        }
        Ok(2 * yes > size)
    }

    /// Adds `v` to `G′` and extracts a new cluster if one is heavy enough.
    fn push(&mut self, v: usize) -> Result<Option<usize>> {
        let i = self.g.add_vertex(v);
        for j in 0..i {
            let u = self.g.vertices()[j];
            let a = self.session.query(v, u)?;
            self.g.set_local(i, j, a.sign());
        }
        let s = max_weight_subgraph(&self.g, &self.limits);
        if s.method == SolveMethod::Heuristic {
            self.stats.heuristic_used = true;
        }
        if s.local.len() < self.accept {
            return Ok(None);
        }
        let m = self.g.len();
        let mut inside = vec![false; m];
        let mut score = vec![0i64; m];
        for &a in &s.local {
            inside[a] = true;
            for (x, sc) in score.iter_mut().enumerate() {
                if x != a {
                    *sc += self.g.weight_local(x, a) as i64;
                }
            }
        }
        let mut members = s.vertices.clone();
        let mut taken = s.local.clone();
        loop {
            let ids = self.g.vertices();
            let z = (0..m)
                .filter(|&x| !inside[x] && score[x] > 0)
                .max_by(|&a, &b| score[a].cmp(&score[b]).then(ids[b].cmp(&ids[a])));
            let Some(z) = z else { break };
            inside[z] = true;
            members.push(ids[z]);
            taken.push(z);
            for (x, sc) in score.iter_mut().enumerate() {
                if x != z {
                    *sc += self.g.weight_local(x, z) as i64;
                }
            }
        }
        self.g.remove_local(&taken);
        self.clusters.push(members);
        Ok(Some(self.clusters.len() - 1))
    }

    fn residual_ml(&mut self) -> Result<Vec<Vec<usize>>> {
        let est = ml_estimate(&self.g, &self.limits)?;
        if est.method == SolveMethod::Heuristic {
            self.stats.heuristic_used = true;
        }
        Ok(est.clusters)
    }
}

/// Faulty-oracle clustering without side information.
pub fn alg2(session: &mut OracleSession, cfg: &FaultyConfig) -> Result<Outcome> {
    check_session(session, cfg)?;
    let n = session.n();
    let panel = cfg.panel(n)?;
    let mut e = Engine::new(session, panel, panel, cfg.limits.clone());
    let mut placed = vec![false; n];
    for v in 0..n {
        if placed[v] {
            continue;
        }
        let mut home = None;
        for c in 0..e.clusters.len() {
            if e.vote(v, c)? {
                home = Some(c);
                break;
            }
        }
        match home {
            Some(c) => e.clusters[c].push(v),
            None => {
                if let Some(c) = e.push(v)? {
                    for &x in &e.clusters[c] {
                        placed[x] = true;
                    }
                }
            }
        }
        placed[v] = true;
    }
    let mut clusters = e.clusters.clone();
    clusters.extend(e.residual_ml()?);
    let stats = e.stats;
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, stats))
}

/// Polynomial-time variant: heuristic extraction, and only subgraphs of
/// size at least `max(⌈c ln n⌉, k_hint)` are accepted. Whatever is left in
/// `G′` is returned as singletons and reported unresolved.
pub fn alg2_poly(session: &mut OracleSession, cfg: &FaultyConfig, k_hint: usize) -> Result<Outcome> {
    check_session(session, cfg)?;
    let n = session.n();
    let panel = cfg.panel(n)?;
    let accept = panel.max(k_hint);
    let mut limits = cfg.limits.clone();
    limits.exact_subgraph_limit = 0;
    let mut e = Engine::new(session, panel, accept, limits);
    e.stats.threshold = Some(accept);
    let mut placed = vec![false; n];
    for v in 0..n {
        if placed[v] {
            continue;
        }
        let mut home = None;
        for c in 0..e.clusters.len() {
            if e.vote(v, c)? {
                home = Some(c);
                break;
            }
        }
        match home {
            Some(c) => e.clusters[c].push(v),
            None => {
                if let Some(c) = e.push(v)? {
                    for &x in &e.clusters[c] {
                        placed[x] = true;
                    }
                }
            }
        }
        placed[v] = true;
    }
    let mut clusters = e.clusters.clone();
    let mut unresolved = e.g.vertices().to_vec();
    unresolved.sort_unstable();
    clusters.extend(unresolved.iter().map(|&v| vec![v]));
    let mut stats = e.stats;
    stats.heuristic_used = true;
    stats.unresolved = unresolved;
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, stats))
}

/// Faulty-oracle clustering guided by side information. Verifications are
/// majority votes; candidates come from the membership ranking.
pub fn alg3(
    session: &mut OracleSession,
    w: &SideInfoMatrix,
    cfg: &FaultyConfig,
    scorer: MembershipScorer,
) -> Result<Outcome> {
    check_session(session, cfg)?;
    let n = session.n();
    if w.n() != n {
        return Err(Error::VertexCountMismatch { found: w.n(), expected: n });
    }
    let panel = cfg.panel(n)?;
    let mut table = MembershipTable::new(w, scorer)?;
    let mut e = Engine::new(session, panel, panel, cfg.limits.clone());
    let mut done = vec![false; n];
    loop {
        let pending: Vec<usize> = (0..n).filter(|&v| !done[v]).collect();
        if pending.is_empty() {
            break;
        }
        let mut home = None;
        let v;
        if e.clusters.is_empty() {
            v = pending[0];
        } else {
            let all: Vec<usize> = (0..e.clusters.len()).collect();
            let r = ranked(&table, &all);
            let (picked, j) = select_vertex(&table, &r, &pending);
            v = picked;
            if e.vote(v, r[j])? {
                home = Some(r[j]);
            }
            if home.is_none() {
                for c in dyadic_candidates(&table, &r, j, v) {
                    if !e.checked.contains(&(v, c)) && e.vote(v, c)? {
                        home = Some(c);
                        break;
                    }
                }
            }
            if home.is_none() {
                for &c in &r {
                    if !e.checked.contains(&(v, c)) && e.vote(v, c)? {
                        home = Some(c);
                        break;
                    }
                }
            }
        }
        done[v] = true;
        match home {
            Some(c) => {
                e.clusters[c].push(v);
                table.add(c, v);
            }
            None => {
                if let Some(c) = e.push(v)? {
                    let id = table.new_cluster(&e.clusters[c]);
                    debug_assert_eq!(id, c);
                    for &x in &e.clusters[c] {
                        done[x] = true;
                    }
                }
            }
        }
    }
    let mut clusters = e.clusters.clone();
    clusters.extend(e.residual_ml()?);
    let mut stats = e.stats;
    stats.side_info_reads = table.reads;
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, stats))
}
