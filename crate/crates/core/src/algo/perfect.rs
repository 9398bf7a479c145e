//! Algorithms for a perfect oracle.

use std::collections::VecDeque;

use super::membership::{MembershipScorer, MembershipTable};
use super::select::{dyadic_candidates, ranked, select_vertex};
use super::{Outcome, RunStats};
use crate::error::{Error, Result};
use crate::oracle::{OracleMode, OracleSession};
use crate::stats::{kl, threshold_m_div, threshold_m_mean, Pmf};
use crate::synth::SideInfoMatrix;
use crate::types::Clustering;

pub(crate) fn require_perfect(session: &OracleSession) -> Result<()> {
    match session.spec().mode {
        OracleMode::Perfect => Ok(()),
        OracleMode::Faulty { .. } => Err(Error::WrongOracleMode("this algorithm needs a perfect oracle".into())),
    }
}

fn check_side_info(session: &OracleSession, w: &SideInfoMatrix) -> Result<()> {
    if w.n() != session.n() {
        return Err(Error::VertexCountMismatch { found: w.n(), expected: session.n() });
    }
    Ok(())
}

/// Greedy clustering: each vertex asks one member of each existing cluster.
pub fn baseline_nk(session: &mut OracleSession) -> Result<Outcome> {
    require_perfect(session)?;
    let n = session.n();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    'vertex: for v in 0..n {
        for c in clusters.iter_mut() {
            if session.query(v, c[0])?.is_same() {
                c.push(v);
                continue 'vertex;
            }
        }
        clusters.push(vec![v]);
    }
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, RunStats::default()))
}

/// Side-information clustering with unknown `f±`.
///
/// Candidates come from the membership ranking; every placement is
/// certified by the oracle, so the output is always exact.
pub fn alg1_lasvegas(session: &mut OracleSession, w: &SideInfoMatrix, scorer: MembershipScorer) -> Result<Outcome> {
    require_perfect(session)?;
    check_side_info(session, w)?;
    if matches!(scorer, MembershipScorer::DivTest { .. }) {
        return Err(Error::InvalidParameter("alg1 takes the average or neg-tv scorer".into()));
    }
    let n = session.n();
    let mut table = MembershipTable::new(w, scorer)?;
    if n == 0 {
        return Ok(Outcome::new(Clustering::from_clusters(0, &[])?, RunStats::default()));
    }
    table.new_cluster(&[0]);
    let mut pending: Vec<usize> = (1..n).collect();
    while !pending.is_empty() {
        let all: Vec<usize> = (0..table.len()).collect();
        let r = ranked(&table, &all);
        let (v, j) = select_vertex(&table, &r, &pending);
        pending.retain(|&x| x != v);

        let mut asked = vec![false; table.len()];
        let mut home = None;
        asked[r[j]] = true;
        if session.query(v, table.members(r[j])[0])?.is_same() {
            home = Some(r[j]);
        }
        if home.is_none() {
            for c in dyadic_candidates(&table, &r, j, v) {
                if asked[c] {
                    continue;
                }
                asked[c] = true;
                if session.query(v, table.members(c)[0])?.is_same() {
                    home = Some(c);
                    break;
                }
            }
        }
        if home.is_none() {
            for &c in &r {
                if asked[c] {
                    continue;
                }
                asked[c] = true;
                if session.query(v, table.members(c)[0])?.is_same() {
                    home = Some(c);
                    break;
                }
            }
        }
        match home {
            Some(c) => table.add(c, v),
            None => {
                table.new_cluster(&[v]);
            }
        }
    }
    let stats = RunStats { side_info_reads: table.reads, ..RunStats::default() };
    let clusters = table.into_clusters();
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, stats))
}

/// Estimation-phase inclusion test.
#[derive(Debug, Clone)]
pub enum InclusionRule {
    /// Include when `Average(v, C) ≥ threshold`.
    Mean { threshold: f64 },
    /// Include when `D(p_{v,C} ‖ f+) < D(p_{v,C} ‖ f−)`.
    Divergence { f_plus: Pmf, f_minus: Pmf },
}

impl InclusionRule {
    /// Mean rule with the midpoint threshold `μ+ − θ/2`.
    pub fn mean(mu_plus: f64, mu_minus: f64) -> Result<Self> {
        if !(mu_plus > mu_minus) {
            return Err(Error::InvalidParameter(format!("need mu_plus > mu_minus, got {mu_plus} ≤ {mu_minus}")));
        }
        Ok(InclusionRule::Mean { threshold: mu_plus - (mu_plus - mu_minus) / 2.0 })
    }

    fn accepts(&self, v: usize, cluster: &[usize], w: &SideInfoMatrix) -> Result<bool> {
        match self {
            InclusionRule::Mean { threshold } => {
                let avg = cluster.iter().map(|&u| w.value(v, u)).sum::<f64>() / cluster.len() as f64;
                Ok(avg >= *threshold)
            }
            InclusionRule::Divergence { f_plus, f_minus } => {
                let mut counts = vec![0u64; w.support().len()];
                for &u in cluster {
                    counts[w.grid_index(v, u)] += 1;
                }
                let p = Pmf::from_counts(w.support(), &counts)?;
                Ok(kl(&p, f_plus)?.value() < kl(&p, f_minus)?.value())
            }
        }
    }
}

/// Monte Carlo variant with known means.
pub fn alg1a_montecarlo(
    session: &mut OracleSession,
    w: &SideInfoMatrix,
    mu_plus: f64,
    mu_minus: f64,
    desk_scale: f64,
) -> Result<Outcome> {
    let rule = InclusionRule::mean(mu_plus, mu_minus)?;
    let m = threshold_m_mean(session.n().max(2), mu_plus - mu_minus, desk_scale)?;
    alg1a_with_threshold(session, w, &rule, m, false)
}

/// Las Vegas variant with known means: estimation-phase inclusions are
/// confirmed by the oracle.
pub fn alg1a_lasvegas(
    session: &mut OracleSession,
    w: &SideInfoMatrix,
    mu_plus: f64,
    mu_minus: f64,
    desk_scale: f64,
) -> Result<Outcome> {
    let rule = InclusionRule::mean(mu_plus, mu_minus)?;
    let m = threshold_m_mean(session.n().max(2), mu_plus - mu_minus, desk_scale)?;
    alg1a_with_threshold(session, w, &rule, m, true)
}

/// Monte Carlo variant with known `f±` and the divergence rule.
pub fn alg_div_montecarlo(
    session: &mut OracleSession,
    w: &SideInfoMatrix,
    f_plus: &Pmf,
    f_minus: &Pmf,
    desk_scale: f64,
) -> Result<Outcome> {
    if !f_plus.same_support(f_minus) || f_plus.support() != w.support() {
        return Err(Error::SupportMismatch);
    }
    if f_plus.min_mass() <= 0.0 || f_minus.min_mass() <= 0.0 {
        return Err(Error::InvalidPmf("divergence rule needs strictly positive pmfs".into()));
    }
    let m = threshold_m_div(session.n().max(2), f_plus, f_minus, desk_scale)?;
    let rule = InclusionRule::Divergence { f_plus: f_plus.clone(), f_minus: f_minus.clone() };
    alg1a_with_threshold(session, w, &rule, m, false)
}

/// Querying and estimation phases with an explicit threshold `M`.
pub fn alg1a_with_threshold(
    session: &mut OracleSession,
    w: &SideInfoMatrix,
    rule: &InclusionRule,
    m: usize,
    las_vegas: bool,
) -> Result<Outcome> {
    require_perfect(session)?;
    check_side_info(session, w)?;
    if m == 0 {
        return Err(Error::InvalidParameter("threshold M must be at least 1".into()));
    }
    let n = session.n();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut closed: Vec<usize> = Vec::new();
    let mut assigned = vec![false; n];
    let mut stats = RunStats { threshold: Some(m), ..RunStats::default() };
    let mut queue = VecDeque::new();

    for v in 0..n {
        if assigned[v] {
            continue;
        }
        let mut home = None;
        for &c in &active {
            if session.query(v, clusters[c][0])?.is_same() {
                home = Some(c);
                break;
            }
        }
        // Closed clusters may miss members in the Las Vegas variant.
        if home.is_none() && las_vegas {
            for &c in &closed {
                if session.query(v, clusters[c][0])?.is_same() {
                    home = Some(c);
                    break;
                }
            }
        }
        let c = match home {
            Some(c) => {
                clusters[c].push(v);
                c
            }
            None => {
                clusters.push(vec![v]);
                active.push(clusters.len() - 1);
                clusters.len() - 1
            }
        };
        assigned[v] = true;
        if clusters[c].len() >= m && active.contains(&c) {
            active.retain(|&x| x != c);
            closed.push(c);
            queue.push_back(c);
        }

        while let Some(c) = queue.pop_front() {
            let before = session.query_count();
            let snapshot = clusters[c].clone();
            for x in 0..n {
                if assigned[x] || !rule.accepts(x, &snapshot, w)? {
                    continue;
                }
                stats.side_info_reads += snapshot.len() as u64;
                if !las_vegas {
                    clusters[c].push(x);
                    assigned[x] = true;
                    continue;
                }
                if session.query(x, snapshot[0])?.is_same() {
                    clusters[c].push(x);
                    assigned[x] = true;
                    continue;
                }
                let others: Vec<usize> = active.iter().chain(&closed).copied().filter(|&d| d != c).collect();
                let mut found = None;
                for d in others {
                    if session.query(x, clusters[d][0])?.is_same() {
                        found = Some(d);
                        break;
                    }
                }
                let d = match found {
                    Some(d) => {
                        clusters[d].push(x);
                        d
                    }
                    None => {
                        clusters.push(vec![x]);
                        active.push(clusters.len() - 1);
                        clusters.len() - 1
                    }
                };
                assigned[x] = true;
                if clusters[d].len() >= m && active.contains(&d) {
                    active.retain(|&y| y != d);
                    closed.push(d);
                    queue.push_back(d);
                }
            }
            stats.estimation_queries += session.query_count() - before;
        }
    }
    Ok(Outcome::new(Clustering::from_clusters(n, &clusters)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleSpec;
    use crate::stats::Pmf;
    use crate::synth::{gen_instance, gen_sideinfo, SizeProfile};
    use crate::types::Instance;

    fn session(inst: &Instance) -> OracleSession {
        OracleSession::new(OracleSpec::perfect(0), inst).unwrap()
    }

    fn noiseless(inst: &Instance) -> SideInfoMatrix {
        let fp = Pmf::point_mass(vec![0.0, 1.0], 1).unwrap();
        let fm = Pmf::point_mass(vec![0.0, 1.0], 0).unwrap();
        gen_sideinfo(inst, &fp, &fm, 0).unwrap()
    }

    #[test]
    fn baseline_trace() {
        let inst = Instance::new(vec![0, 0, 1, 1], 2, SizeProfile::Balanced, 0).unwrap();
        let mut s = session(&inst);
        let out = baseline_nk(&mut s).unwrap();
        assert_eq!(s.query_count(), 4);
        assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
    }

    #[test]
    fn baseline_extremes() {
        let one = Instance::new(vec![0; 30], 1, SizeProfile::Balanced, 0).unwrap();
        let mut s = session(&one);
        baseline_nk(&mut s).unwrap();
        assert_eq!(s.query_count(), 29);
        let all = Instance::new((0..30).collect(), 30, SizeProfile::Balanced, 0).unwrap();
        let mut s = session(&all);
        baseline_nk(&mut s).unwrap();
        assert_eq!(s.query_count(), 30 * 29 / 2);
    }

    #[test]
    fn baseline_rejects_faulty() {
        let inst = gen_instance(10, 2, SizeProfile::Balanced, 0).unwrap();
        let mut s = OracleSession::new(OracleSpec::faulty(0.1, 0).unwrap(), &inst).unwrap();
        assert!(matches!(baseline_nk(&mut s), Err(Error::WrongOracleMode(_))));
    }

    #[test]
    fn alg1_noiseless_bound() {
        for scorer in [MembershipScorer::Average, MembershipScorer::NegTv] {
            for seed in 0..5 {
                let (n, k) = (120, 6);
                let inst = gen_instance(n, k, SizeProfile::Powerlaw { alpha: 1.0 }, seed).unwrap();
                let w = noiseless(&inst);
                let mut s = session(&inst);
                let out = alg1_lasvegas(&mut s, &w, scorer.clone()).unwrap();
                assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
                // Singletons score the sentinel under neg-tv, so each second
                // member may pay a full exhaustive pass.
                let extra = if scorer == MembershipScorer::NegTv { k * (k - 1) } else { 0 };
                let bound = n - 1 + k * (k - 1) / 2 + (k - 1) + extra;
                assert!(s.query_count() <= bound, "{scorer:?}: {}", s.query_count());
            }
        }
    }

    #[test]
    fn alg1_single_cluster() {
        let inst = Instance::new(vec![0; 25], 1, SizeProfile::Balanced, 0).unwrap();
        let w = noiseless(&inst);
        let mut s = session(&inst);
        alg1_lasvegas(&mut s, &w, MembershipScorer::NegTv).unwrap();
        assert_eq!(s.query_count(), 24);
    }

    #[test]
    fn alg1a_noiseless_exact() {
        let inst = gen_instance(300, 4, SizeProfile::Balanced, 2).unwrap();
        let w = noiseless(&inst);
        let mut s = session(&inst);
        let out = alg1a_montecarlo(&mut s, &w, 1.0, 0.0, 1.0).unwrap();
        let m = threshold_m_mean(300, 1.0, 1.0).unwrap();
        assert_eq!(out.stats.threshold, Some(m));
        assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
        assert!(s.query_count() <= 16 * m);
    }

    #[test]
    fn alg1a_lasvegas_all_singletons() {
        let n = 20;
        let inst = Instance::new((0..n).collect(), n, SizeProfile::Balanced, 0).unwrap();
        let w = noiseless(&inst);
        let mut s = session(&inst);
        let out = alg1a_lasvegas(&mut s, &w, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(out.clustering.num_clusters(), n);
        assert_eq!(s.query_count(), n * (n - 1) / 2);
    }

    #[test]
    fn lasvegas_repairs_wrong_inclusion() {
        // Side info that says everyone belongs together.
        let inst = gen_instance(60, 3, SizeProfile::Balanced, 3).unwrap();
        let w = SideInfoMatrix::from_fn(60, vec![0.0, 1.0], |_, _| 1).unwrap();
        let rule = InclusionRule::mean(1.0, 0.0).unwrap();
        let mut s = session(&inst);
        let out = alg1a_with_threshold(&mut s, &w, &rule, 2, true).unwrap();
        assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
        assert!(out.stats.estimation_queries > 0);
        let mut s = session(&inst);
        let mc = alg1a_with_threshold(&mut s, &w, &rule, 2, false).unwrap();
        assert!(mc.clustering.num_clusters() < 3);
        assert_eq!(mc.stats.estimation_queries, 0);
    }

    #[test]
    fn div_rule_noisy_small() {
        let inst = gen_instance(200, 2, SizeProfile::Balanced, 9).unwrap();
        let fp = Pmf::new(vec![0.25, 0.75], vec![0.1, 0.9]).unwrap();
        let fm = Pmf::new(vec![0.25, 0.75], vec![0.9, 0.1]).unwrap();
        let w = gen_sideinfo(&inst, &fp, &fm, 10).unwrap();
        let mut s = session(&inst);
        let out = alg_div_montecarlo(&mut s, &w, &fp, &fm, 0.5).unwrap();
        let m = out.stats.threshold.unwrap();
        assert!(s.query_count() <= 4 * m);
        assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
    }
}
