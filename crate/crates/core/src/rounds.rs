//! Round-limited schemes: each round is one batch of at most `cap` pairs
//! fixed before any of its answers is seen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algo::faulty::FaultyConfig;
use crate::algo::membership::{MembershipScorer, MembershipTable};
use crate::algo::perfect::require_perfect;
use crate::algo::select::{best_rank, dyadic_candidates, ranked};
use crate::algo::subgraph::{max_weight_subgraph, ml_estimate, SolveMethod};
use crate::algo::{Outcome, RunStats};
use crate::error::{Error, Result};
use crate::oracle::{OracleMode, OracleSession};
use crate::synth::{sample_without_replacement, SideInfoMatrix};
use crate::types::{Answer, Clustering, SignedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    /// Pairs per round; `None` means `⌈n log2 n⌉`.
    #[serde(default)]
    pub cap: Option<usize>,
    /// Sample size; `None` means `⌈√(n log2 n)⌉`.
    #[serde(default)]
    pub sample_size: Option<usize>,
    #[serde(default)]
    pub faulty: Option<FaultyConfig>,
    #[serde(default = "default_scorer")]
    pub scorer: MembershipScorer,
    /// Seed for vertex sampling.
    #[serde(default)]
    pub seed: u64,
}

fn default_scorer() -> MembershipScorer {
    MembershipScorer::NegTv
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig { cap: None, sample_size: None, faulty: None, scorer: default_scorer(), seed: 0 }
    }
}

impl RoundConfig {
    pub fn sample_size_for(&self, n: usize) -> usize {
        self.sample_size.unwrap_or_else(|| default_sample_size(n))
    }
}

/// `⌈√(n log2 n)⌉`.
pub fn default_sample_size(n: usize) -> usize {
    if n < 2 {
        return n;
    }
    let x = (n as f64 * (n as f64).log2()).sqrt();
    crate::stats::ceil_count(x)
}

fn session_cap(session: &OracleSession) -> Result<usize> {
    let cap = session.round_cap().ok_or(Error::NoRoundCap)?;
    if cap == 0 {
        return Err(Error::InvalidParameter("round cap must be positive".into()));
    }
    Ok(cap)
}

/// The sample's pairwise queries must fit in one round.
fn check_feasible(cap: usize, s: usize) -> Result<()> {
    if cap < s * s.saturating_sub(1) / 2 {
        return Err(Error::InvalidParameter(format!("round cap {cap} is below C({s}, 2) for the sample")));
    }
    Ok(())
}

/// Submits pairs in consecutive rounds of at most `cap`.
fn run_flat(session: &mut OracleSession, pairs: &[(usize, usize)], cap: usize) -> Result<Vec<Answer>> {
    let mut out = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(cap) {
        out.extend(session.batch_query(chunk)?);
    }
    Ok(out)
}

/// Packs groups into rounds without splitting a group unless it alone
/// exceeds the cap.
fn run_grouped(session: &mut OracleSession, groups: &[Vec<(usize, usize)>], cap: usize) -> Result<Vec<Vec<Answer>>> {
    let mut flat: Vec<(usize, usize)> = Vec::new();
    let mut bounds = Vec::with_capacity(groups.len());
    let mut answers: Vec<Answer> = Vec::new();
    let mut pending: Vec<(usize, usize)> = Vec::new();
    for g in groups {
        bounds.push((flat.len(), flat.len() + g.len()));
        flat.extend(g);
        if !pending.is_empty() && pending.len() + g.len() > cap {
            answers.extend(session.batch_query(&pending)?);
            pending.clear();
        }
        if g.len() > cap {
            answers.extend(run_flat(session, g, cap)?);
        } else {
            pending.extend(g);
        }
    }
    answers.extend(session.batch_query(&pending)?);
    Ok(bounds.into_iter().map(|(a, b)| answers[a..b].to_vec()).collect())
}

fn all_pairs(vs: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(vs.len() * vs.len().saturating_sub(1) / 2);
    for (i, &u) in vs.iter().enumerate() {
        for &v in &vs[i + 1..] {
            out.push((u, v));
        }
    }
    out
}

/// Components of the `Same` graph on a fully queried sample.
fn sample_clusters(sample: &[usize], answers: &[Answer]) -> Vec<Vec<usize>> {
    let m = sample.len();
    let mut root: Vec<usize> = (0..m).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while root[r] != r {
            r = root[r];
        }
        let mut y = x;
        while root[y] != r {
            let next = root[y];
            root[y] = r;
            y = next;
        }
        r
    }
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            if answers[k].is_same() {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
            k += 1;
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut root, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(sample[i]);
    }
    groups
}

/// One full cluster per round: pick the first unassigned vertex and ask
/// it against every other unassigned vertex.
pub fn rounds_perfect_noside(session: &mut OracleSession) -> Result<Outcome> {
    require_perfect(session)?;
    let n = session.n();
    let cap = session_cap(session)?;
    if cap + 1 < n {
        return Err(Error::InvalidParameter(format!("round cap {cap} is below n − 1 = {}", n - 1)));
    }
    let mut rest: Vec<usize> = (0..n).collect();
    let mut clusters = Vec::new();
    while let Some((&v, others)) = rest.split_first() {
        let pairs: Vec<(usize, usize)> = others.iter().map(|&u| (v, u)).collect();
        let answers = session.batch_query(&pairs)?;
        let mut cluster = vec![v];
        let mut left = Vec::new();
        for (&u, a) in others.iter().zip(&answers) {
            if a.is_same() {
                cluster.push(u);
            } else {
                left.push(u);
            }
        }
        clusters.push(cluster);
        rest = left;
    }
    let rounds = clusters.len();
    let mut out = Outcome::new(Clustering::from_clusters(n, &clusters)?, RunStats::default());
    out.rounds = Some(rounds);
    Ok(out)
}

/// Sample, then ranked candidate checks, then fresh samples merged into
/// the existing clusters, until every vertex is placed.
pub fn rounds_perfect_side(session: &mut OracleSession, w: &SideInfoMatrix, cfg: &RoundConfig) -> Result<Outcome> {
    require_perfect(session)?;
    let n = session.n();
    if w.n() != n {
        return Err(Error::VertexCountMismatch { found: w.n(), expected: n });
    }
    let cap = session_cap(session)?;
    let s = cfg.sample_size_for(n).max(1);
    check_feasible(cap, s)?;
    let start = session.ledger().round_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = MembershipTable::new(w, cfg.scorer.clone())?;
    let mut assigned = vec![false; n];
    if n > 0 {
        let all: Vec<usize> = (0..n).collect();
        let sample = sample_without_replacement(&mut rng, &all, s);
        let answers = run_flat(session, &all_pairs(&sample), cap)?;
        for c in sample_clusters(&sample, &answers) {
            for &x in &c {
                assigned[x] = true;
            }
            table.new_cluster(&c);
        }
    }
    loop {
        // Step 2: ranked and dyadic candidates for every unassigned vertex.
        let unassigned: Vec<usize> = (0..n).filter(|&v| !assigned[v]).collect();
        if unassigned.is_empty() {
            break;
        }
        let ids: Vec<usize> = (0..table.len()).collect();
        let r = ranked(&table, &ids);
        let mut cands: Vec<Vec<usize>> = Vec::with_capacity(unassigned.len());
        for &v in &unassigned {
            let j = best_rank(&table, &r, v);
            let mut c = vec![r[j]];
            for d in dyadic_candidates(&table, &r, j, v) {
                if !c.contains(&d) {
                    c.push(d);
                }
            }
            cands.push(c);
        }
        let groups: Vec<Vec<(usize, usize)>> = unassigned
            .iter()
            .zip(&cands)
            .map(|(&v, c)| c.iter().map(|&d| (v, table.members(d)[0])).collect())
            .collect();
        let answers = run_grouped(session, &groups, cap)?;
        for ((&v, c), a) in unassigned.iter().zip(&cands).zip(&answers) {
            if let Some(i) = a.iter().position(|x| x.is_same()) {
                table.add(c[i], v);
                assigned[v] = true;
            }
        }

        // Step 3: fresh sample among the still unassigned.
        let unassigned: Vec<usize> = (0..n).filter(|&v| !assigned[v]).collect();
        if unassigned.is_empty() {
            break;
        }
        let sample = sample_without_replacement(&mut rng, &unassigned, s);
        let answers = run_flat(session, &all_pairs(&sample), cap)?;
        let fresh = sample_clusters(&sample, &answers);

        // Step 4: one representative query per (new, old) cluster pair.
        let old = table.len();
        let pairs: Vec<(usize, usize)> =
            fresh.iter().flat_map(|f| (0..old).map(|c| (f[0], table.members(c)[0])).collect::<Vec<_>>()).collect();
        let answers = run_flat(session, &pairs, cap)?;
        for (i, f) in fresh.iter().enumerate() {
            let hit = (0..old).find(|&c| answers[i * old + c].is_same());
            match hit {
                Some(c) => {
                    for &x in f {
                        table.add(c, x);
                    }
                }
                None => {
                    table.new_cluster(f);
                }
            }
            for &x in f {
                assigned[x] = true;
            }
        }
    }
    let rounds = session.ledger().round_count() - start;
    let stats = RunStats { side_info_reads: table.reads, ..RunStats::default() };
    let clusters = table.into_clusters();
    let mut out = Outcome::new(Clustering::from_clusters(n, &clusters)?, stats);
    out.rounds = Some(rounds);
    Ok(out)
}

/// Largest `r` with `r(r − 1)/2 + r·g ≤ cap`, at least 1.
pub fn step3_size(cap: usize, g: usize) -> usize {
    let mut r = 0usize;
    while (r + 1) * r / 2 + (r + 1) * g <= cap {
        r += 1;
    }
    r.max(1)
}

/// Faulty-oracle round scheme without side information.
pub fn rounds_faulty_noside(session: &mut OracleSession, cfg: &RoundConfig) -> Result<Outcome> {
    let fc = cfg.faulty.clone().ok_or(Error::Config("rounds-faulty needs faulty constants".into()))?;
    fc.validate()?;
    match session.spec().mode {
        OracleMode::Faulty { p } if (0.5 - p - fc.lambda).abs() < 1e-9 => {}
        OracleMode::Faulty { p } => {
            return Err(Error::InvalidParameter(format!("lambda {} does not match oracle error rate {p}", fc.lambda)))
        }
        OracleMode::Perfect => return Err(Error::WrongOracleMode("rounds-faulty needs a faulty oracle".into())),
    }
    let n = session.n();
    let cap = session_cap(session)?;
    let s = cfg.sample_size_for(n).max(1);
    check_feasible(cap, s)?;
    let panel = fc.panel(n)?;
    let start = session.ledger().round_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = RunStats { threshold: Some(panel), ..RunStats::default() };

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut clustered = vec![false; n];
    let mut in_g = vec![false; n];
    let mut g = SignedGraph::new();

    let all: Vec<usize> = (0..n).collect();
    let first = sample_without_replacement(&mut rng, &all, s);
    grow_graph(session, &mut g, &first, cap)?;
    for &x in &first {
        in_g[x] = true;
    }
    loop {
        // Step 2: extract heavy subgraphs and grow them by majority votes.
        loop {
            let sub = max_weight_subgraph(&g, &fc.limits);
            if sub.method == SolveMethod::Heuristic {
                stats.heuristic_used = true;
            }
            if sub.local.len() < panel || sub.local.is_empty() {
                break;
            }
            g.remove_local(&sub.local);
            let mut cluster = sub.vertices.clone();
            for &x in &cluster {
                in_g[x] = false;
                clustered[x] = true;
            }
            let voters = cluster[..panel.min(cluster.len())].to_vec();
            let outside: Vec<usize> = (0..n).filter(|&x| !clustered[x]).collect();
            let mut groups = Vec::new();
            let mut known = Vec::new();
            for &x in &outside {
                let (k, fresh): (Vec<usize>, Vec<usize>) = voters.iter().partition(|&&u| session.is_known(x, u));
                known.push(k);
                groups.push(fresh.into_iter().map(|u| (x, u)).collect::<Vec<_>>());
            }
            let answers = run_grouped(session, &groups, cap)?;
            stats.panel_votes += outside.len();
            let mut joined = Vec::new();
            for ((&x, k), a) in outside.iter().zip(&known).zip(&answers) {
                let mut yes = a.iter().filter(|a| a.is_same()).count();
                for &u in k {
                    if session.query(x, u)?.is_same() {
                        yes += 1;
                    }
                }
                if 2 * yes > voters.len() {
                    joined.push(x);
                }
            }
            let drop: Vec<usize> = joined.iter().filter_map(|&x| g.local_index(x)).collect();
            g.remove_local(&drop);
            for &x in &joined {
                in_g[x] = false;
                clustered[x] = true;
                cluster.push(x);
            }
            clusters.push(cluster);
        }
        // Step 3: grow G″ by as many fresh vertices as one round allows.
        let pool: Vec<usize> = (0..n).filter(|&x| !clustered[x] && !in_g[x]).collect();
        if pool.is_empty() {
            break;
        }
        let r = step3_size(cap, g.len()).min(pool.len());
        let fresh = sample_without_replacement(&mut rng, &pool, r);
        grow_graph(session, &mut g, &fresh, cap)?;
        for &x in &fresh {
            in_g[x] = true;
        }
    }
    let est = ml_estimate(&g, &fc.limits)?;
    if est.method == SolveMethod::Heuristic {
        stats.heuristic_used = true;
    }
    clusters.extend(est.clusters);
    let rounds = session.ledger().round_count() - start;
    let mut out = Outcome::new(Clustering::from_clusters(n, &clusters)?, stats);
    out.rounds = Some(rounds);
    Ok(out)
}

/// Adds `fresh` to `g`, querying all new pairs in batches.
fn grow_graph(session: &mut OracleSession, g: &mut SignedGraph, fresh: &[usize], cap: usize) -> Result<()> {
    let old: Vec<usize> = g.vertices().to_vec();
    let mut pairs = all_pairs(fresh);
    for &x in fresh {
        pairs.extend(old.iter().map(|&u| (x, u)));
    }
    let answers = run_flat(session, &pairs, cap)?;
    for &x in fresh {
        g.add_vertex(x);
    }
    for (&(u, v), a) in pairs.iter().zip(&answers) {
        g.set(u, v, a.sign())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleSpec;
    use crate::stats::Pmf;
    use crate::synth::{gen_instance, gen_sideinfo, SizeProfile};
    use crate::types::Instance;

    fn capped(spec: OracleSpec, inst: &Instance) -> OracleSession {
        let cap = crate::oracle::default_round_cap(inst.n);
        OracleSession::new(spec, inst).unwrap().with_round_cap(cap)
    }

    fn caps_respected(s: &OracleSession) -> bool {
        let cap = s.round_cap().unwrap();
        s.ledger().per_round_sizes().iter().all(|&b| b <= cap)
    }

    #[test]
    fn noside_rounds_equal_k() {
        for (n, k) in [(300, 7), (40, 1), (25, 25)] {
            let inst = gen_instance(n, k, SizeProfile::Balanced, 3).unwrap();
            let mut s = capped(OracleSpec::perfect(0), &inst);
            let out = rounds_perfect_noside(&mut s).unwrap();
            assert_eq!(out.rounds, Some(k));
            assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
            assert!(caps_respected(&s));
        }
        let inst = gen_instance(30, 2, SizeProfile::Balanced, 0).unwrap();
        let mut s = OracleSession::new(OracleSpec::perfect(0), &inst).unwrap().with_round_cap(10);
        assert!(rounds_perfect_noside(&mut s).is_err());
        let mut s = OracleSession::new(OracleSpec::perfect(0), &inst).unwrap();
        assert!(matches!(rounds_perfect_noside(&mut s), Err(Error::NoRoundCap)));
    }

    #[test]
    fn step3_formula() {
        assert_eq!(step3_size(10, 0), 5);
        assert_eq!(step3_size(10, 3), 2);
        assert_eq!(step3_size(2, 5), 1);
        for cap in [50, 500, 3458] {
            for g in [0, 7, 40] {
                let r = step3_size(cap, g);
                if r > 1 {
                    assert!(r * (r - 1) / 2 + r * g <= cap);
                }
                assert!((r + 1) * r / 2 + (r + 1) * g > cap);
            }
        }
    }

    #[test]
    fn side_noiseless_few_rounds() {
        let fp = Pmf::point_mass(vec![0.0, 1.0], 1).unwrap();
        let fm = Pmf::point_mass(vec![0.0, 1.0], 0).unwrap();
        for seed in 0..5 {
            let (n, k) = (400, 8);
            let inst = gen_instance(n, k, SizeProfile::Balanced, seed).unwrap();
            let w = gen_sideinfo(&inst, &fp, &fm, seed).unwrap();
            let mut s = capped(OracleSpec::perfect(0), &inst);
            let cfg = RoundConfig { seed, ..RoundConfig::default() };
            let out = rounds_perfect_side(&mut s, &w, &cfg).unwrap();
            assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
            let cap = s.round_cap().unwrap();
            assert!(out.rounds.unwrap() <= 3 + (k * k).div_ceil(cap));
            assert!(caps_respected(&s));
            assert!(s.query_count() <= cap * out.rounds.unwrap());
        }
    }

    #[test]
    fn faulty_degenerate_exact() {
        for seed in 0..3 {
            let inst = gen_instance(200, 4, SizeProfile::Balanced, seed).unwrap();
            let mut s = capped(OracleSpec::faulty(0.0, seed).unwrap(), &inst);
            let cfg = RoundConfig { faulty: Some(FaultyConfig::new(0.5, 0.05)), seed, ..RoundConfig::default() };
            let out = rounds_faulty_noside(&mut s, &cfg).unwrap();
            assert_eq!(out.clustering.canonical(), inst.as_clustering().canonical());
            assert!(caps_respected(&s));
        }
    }

    #[test]
    fn grouped_batches_keep_groups_whole() {
        let inst = gen_instance(20, 2, SizeProfile::Balanced, 0).unwrap();
        let mut s = OracleSession::new(OracleSpec::perfect(0), &inst).unwrap().with_round_cap(5);
        let groups = vec![vec![(0, 1), (0, 2), (0, 3)], vec![(4, 5), (4, 6)], vec![(7, 8), (7, 9)], vec![(10, 11); 1]];
        let a = run_grouped(&mut s, &groups, 5).unwrap();
        assert_eq!(a.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2, 1]);
        assert_eq!(s.ledger().per_round_sizes(), &[5, 3]);
        let big = vec![(0..12).map(|i| (19, i)).collect::<Vec<_>>()];
        run_grouped(&mut s, &big, 5).unwrap();
        assert_eq!(&s.ledger().per_round_sizes()[2..], &[5, 5, 2]);
    }
}
