//! Membership scores ranking clusters as homes for a vertex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{kl, Pmf};
use crate::synth::SideInfoMatrix;

/// Score assigned by [`MembershipScorer::NegTv`] to clusters of size 1,
/// whose intra distribution is undefined. Lies below every TV score.
pub const SINGLETON_SENTINEL: f64 = -2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MembershipScorer {
    /// Mean similarity to the cluster.
    Average,
    /// Negated TV distance between the inter and intra histograms.
    NegTv,
    /// `D(p_{v,C} ‖ f−) − D(p_{v,C} ‖ f+)`; positive means accept.
    DivTest { f_plus: Pmf, f_minus: Pmf },
}

impl MembershipScorer {
    pub fn div_test(f_plus: Pmf, f_minus: Pmf) -> Result<Self> {
        if !f_plus.same_support(&f_minus) {
            return Err(Error::SupportMismatch);
        }
        if f_plus.min_mass() <= 0.0 || f_minus.min_mass() <= 0.0 {
            return Err(Error::InvalidPmf("divergence scorer needs strictly positive pmfs".into()));
        }
        Ok(MembershipScorer::DivTest { f_plus, f_minus })
    }
}

/// Empirical distribution of observed side-information values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist(pub Pmf);

impl EmpiricalDist {
    pub fn pmf(&self) -> &Pmf {
        &self.0
    }
}

fn check_cluster(v: usize, cluster: &[usize]) -> Result<()> {
    if cluster.is_empty() {
        return Err(Error::InvalidParameter("membership against an empty cluster".into()));
    }
    if cluster.contains(&v) {
        return Err(Error::InvalidParameter(format!("vertex {v} is inside the cluster")));
    }
    Ok(())
}

/// `Σ_{u∈C} w(v, u) / |C|`.
pub fn avg_membership(v: usize, cluster: &[usize], w: &SideInfoMatrix) -> Result<f64> {
    check_cluster(v, cluster)?;
    Ok(cluster.iter().map(|&u| w.value(v, u)).sum::<f64>() / cluster.len() as f64)
}

/// Histogram of `w(v, u)` over `u ∈ C`.
pub fn inter_dist(v: usize, cluster: &[usize], w: &SideInfoMatrix) -> Result<EmpiricalDist> {
    check_cluster(v, cluster)?;
    let mut counts = vec![0u64; w.support().len()];
    for &u in cluster {
        counts[w.grid_index(v, u)] += 1;
    }
    Ok(EmpiricalDist(Pmf::from_counts(w.support(), &counts)?))
}

/// Histogram of `w(u, u')` over ordered pairs of distinct members.
pub fn intra_dist(cluster: &[usize], w: &SideInfoMatrix) -> Result<EmpiricalDist> {
    if cluster.len() < 2 {
        return Err(Error::InvalidParameter("intra distribution needs |C| ≥ 2".into()));
    }
    let mut counts = vec![0u64; w.support().len()];
    for (i, &u) in cluster.iter().enumerate() {
        for &x in &cluster[i + 1..] {
            counts[w.grid_index(u, x)] += 2;
        }
    }
    Ok(EmpiricalDist(Pmf::from_counts(w.support(), &counts)?))
}

/// Scores `v` against `C` from scratch. Higher means more likely a member.
pub fn membership(scorer: &MembershipScorer, v: usize, cluster: &[usize], w: &SideInfoMatrix) -> Result<f64> {
    match scorer {
        MembershipScorer::Average => avg_membership(v, cluster, w),
        MembershipScorer::NegTv => {
            check_cluster(v, cluster)?;
            if cluster.len() < 2 {
                return Ok(SINGLETON_SENTINEL);
            }
            let inter = inter_dist(v, cluster, w)?;
            let intra = intra_dist(cluster, w)?;
            Ok(-crate::stats::tv(inter.pmf(), intra.pmf())?)
        }
        MembershipScorer::DivTest { f_plus, f_minus } => {
            let p = inter_dist(v, cluster, w)?;
            div_score(p.pmf(), f_plus, f_minus)
        }
    }
}

fn div_score(p: &Pmf, f_plus: &Pmf, f_minus: &Pmf) -> Result<f64> {
    Ok(kl(p, f_minus)?.value() - kl(p, f_plus)?.value())
}

/// Incrementally maintained statistics of every tracked cluster against
/// every vertex, so that scores cost `O(q)` each.
pub(crate) struct MembershipTable<'a> {
    w: &'a SideInfoMatrix,
    scorer: MembershipScorer,
    q: usize,
    n: usize,
    clusters: Vec<ClusterStats>,
    pub(crate) reads: u64,
}

pub(crate) struct ClusterStats {
    pub(crate) members: Vec<usize>,
    sums: Vec<f64>,
    inter: Vec<u32>,
    intra: Vec<u64>,
}

impl<'a> MembershipTable<'a> {
    pub(crate) fn new(w: &'a SideInfoMatrix, scorer: MembershipScorer) -> Result<Self> {
        if let MembershipScorer::DivTest { f_plus, .. } = &scorer {
            if f_plus.support() != w.support() {
                return Err(Error::SupportMismatch);
            }
        }
        Ok(MembershipTable { w, q: w.support().len(), n: w.n(), scorer, clusters: Vec::new(), reads: 0 })
    }

    pub(crate) fn len(&self) -> usize {
        self.clusters.len()
    }

    pub(crate) fn members(&self, c: usize) -> &[usize] {
        &self.clusters[c].members
    }

    pub(crate) fn size(&self, c: usize) -> usize {
        self.clusters[c].members.len()
    }

    pub(crate) fn into_clusters(self) -> Vec<Vec<usize>> {
        self.clusters.into_iter().map(|c| c.members).collect()
    }

    /// Opens a cluster and returns its id.
    pub(crate) fn new_cluster(&mut self, members: &[usize]) -> usize {
        self.clusters.push(ClusterStats {
            members: Vec::new(),
            sums: vec![0.0; self.n],
            inter: vec![0; self.n * self.q],
            intra: vec![0; self.q],
        });
        let id = self.clusters.len() - 1;
        for &x in members {
            self.add(id, x);
        }
        id
    }

    pub(crate) fn add(&mut self, c: usize, x: usize) {
        let (w, q) = (self.w, self.q);
        let stats = &mut self.clusters[c];
        for &u in &stats.members {
            stats.intra[w.grid_index(x, u)] += 1;
        }
        for v in (0..self.n).filter(|&v| v != x) {
            let g = w.grid_index(v, x);
            stats.sums[v] += w.support()[g];
            stats.inter[v * q + g] += 1;
        }
        self.reads += (self.n - 1 + stats.members.len()) as u64;
        stats.members.push(x);
    }

    pub(crate) fn score(&self, v: usize, c: usize) -> f64 {
        let stats = &self.clusters[c];
        let size = stats.members.len();
        match &self.scorer {
            MembershipScorer::Average => stats.sums[v] / size as f64,
            MembershipScorer::NegTv => {
                if size < 2 {
                    return SINGLETON_SENTINEL;
                }
                let pairs = (size * (size - 1) / 2) as f64;
                let inter = &stats.inter[v * self.q..(v + 1) * self.q];
                let diff: f64 = inter
                    .iter()
                    .zip(&stats.intra)
                    .map(|(&a, &b)| (a as f64 / size as f64 - b as f64 / pairs).abs())
                    .sum();
                -0.5 * diff
            }
            MembershipScorer::DivTest { f_plus, f_minus } => {
                let inter = &stats.inter[v * self.q..(v + 1) * self.q];
                let p: Vec<f64> = inter.iter().map(|&a| a as f64 / size as f64).collect();
                let (mut d_minus, mut d_plus) = (0.0, 0.0);
                for ((pi, fp), fm) in p.iter().zip(f_plus.mass()).zip(f_minus.mass()) {
                    if *pi > 0.0 {
                        d_plus += pi * (pi / fp).ln();
                        d_minus += pi * (pi / fm).ln();
                    }
                }
                d_minus - d_plus
            }
        }
    }
}
