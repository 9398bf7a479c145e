//! Config-driven experiment runs, summaries and CSV output.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algo::faulty::{alg2, alg2_poly, alg3, FaultyConfig};
use crate::algo::membership::MembershipScorer;
use crate::algo::perfect::{alg1_lasvegas, alg1a_lasvegas, alg1a_montecarlo, alg_div_montecarlo, baseline_nk};
use crate::algo::subgraph::SolverLimits;
use crate::algo::Outcome;
use crate::error::{Error, Result};
use crate::oracle::{default_round_cap, OracleMode, OracleSession, OracleSpec};
use crate::rounds::{rounds_faulty_noside, rounds_perfect_noside, rounds_perfect_side, RoundConfig};
use crate::stats::{
    lower_bound_faulty, lower_bound_lasvegas, lower_bound_perfect_side, symmetric_divergence, Extended, Pmf,
};
use crate::synth::{example2_pmfs, gen_instance, gen_sideinfo, SideInfoMatrix, SizeProfile};
use crate::types::{compare_clusterings, Instance, RunReport};

pub const CSV_HEADER: &str = "algorithm,n,k,p,seed,queries,rounds,exact,recall,bound_ratio,wall_time";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Baseline,
    Alg1,
    #[serde(rename = "alg1a-mc")]
    Alg1aMc,
    #[serde(rename = "alg1a-lv")]
    Alg1aLv,
    AlgDiv,
    Alg2,
    Alg2Poly,
    Alg3,
    RoundsNoside,
    RoundsSide,
    RoundsFaulty,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Baseline,
        Algorithm::Alg1,
        Algorithm::Alg1aMc,
        Algorithm::Alg1aLv,
        Algorithm::AlgDiv,
        Algorithm::Alg2,
        Algorithm::Alg2Poly,
        Algorithm::Alg3,
        Algorithm::RoundsNoside,
        Algorithm::RoundsSide,
        Algorithm::RoundsFaulty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg1aMc => "alg1a-mc",
            Algorithm::Alg1aLv => "alg1a-lv",
            Algorithm::AlgDiv => "alg-div",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg2Poly => "alg2-poly",
            Algorithm::Alg3 => "alg3",
            Algorithm::RoundsNoside => "rounds-noside",
            Algorithm::RoundsSide => "rounds-side",
            Algorithm::RoundsFaulty => "rounds-faulty",
        }
    }

    pub fn needs_side_info(self) -> bool {
        matches!(
            self,
            Algorithm::Alg1
                | Algorithm::Alg1aMc
                | Algorithm::Alg1aLv
                | Algorithm::AlgDiv
                | Algorithm::Alg3
                | Algorithm::RoundsSide
        )
    }

    pub fn needs_faulty_oracle(self) -> bool {
        matches!(self, Algorithm::Alg2 | Algorithm::Alg2Poly | Algorithm::Alg3 | Algorithm::RoundsFaulty)
    }

    pub fn is_batched(self) -> bool {
        matches!(self, Algorithm::RoundsNoside | Algorithm::RoundsSide | Algorithm::RoundsFaulty)
    }

    /// Always returns the ground truth.
    pub fn is_las_vegas(self) -> bool {
        matches!(
            self,
            Algorithm::Baseline
                | Algorithm::Alg1
                | Algorithm::Alg1aLv
                | Algorithm::RoundsNoside
                | Algorithm::RoundsSide
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Named side-information distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SideInfoSpec {
    /// Quantized perturbed-uniform pair.
    Example2 {
        eps: f64,
        grid: usize,
    },
    /// Noiseless: intra pairs read 1, inter pairs read 0.
    Pointmass,
    /// Bernoulli values on `{0, 1}`.
    BernoulliGrid {
        p_plus: f64,
        p_minus: f64,
    },
    Custom {
        f_plus: Pmf,
        f_minus: Pmf,
    },
}

impl SideInfoSpec {
    /// `(f+, f−)`.
    pub fn pmfs(&self) -> Result<(Pmf, Pmf)> {
        match self {
            SideInfoSpec::Example2 { eps, grid } => example2_pmfs(*eps, *grid),
            SideInfoSpec::Pointmass => Ok((Pmf::point_mass(vec![0.0, 1.0], 1)?, Pmf::point_mass(vec![0.0, 1.0], 0)?)),
            SideInfoSpec::BernoulliGrid { p_plus, p_minus } => {
                Ok((Pmf::bernoulli(*p_plus)?, Pmf::bernoulli(*p_minus)?))
            }
            SideInfoSpec::Custom { f_plus, f_minus } => {
                if !f_plus.same_support(f_minus) {
                    return Err(Error::SupportMismatch);
                }
                Ok((f_plus.clone(), f_minus.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range {
        count: usize,
        #[serde(default)]
        start: u64,
    },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { count, start } => (0..*count as u64).map(|i| start + i).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub desk_scale: f64,
    pub round_cap: Option<usize>,
    pub sample_size: Option<usize>,
    pub limits: SolverLimits,
    /// Size hint for `alg2-poly`.
    pub k_hint: Option<usize>,
    pub scorer: MembershipScorer,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            desk_scale: 1.0,
            round_cap: None,
            sample_size: None,
            limits: SolverLimits::default(),
            k_hint: None,
            scorer: MembershipScorer::NegTv,
        }
    }
}

/// Parameter grid; each listed axis replaces the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub profile: SizeProfile,
    #[serde(default = "perfect_mode")]
    pub oracle: OracleMode,
    #[serde(default)]
    pub side_info: Option<SideInfoSpec>,
    #[serde(default)]
    pub constants: Constants,
    pub seeds: Seeds,
    /// Truth clusters at least this large count toward recall.
    #[serde(default)]
    pub recall_threshold: Option<usize>,
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

fn perfect_mode() -> OracleMode {
    OracleMode::Perfect
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, n: usize, k: usize, seeds: Seeds) -> Self {
        ExperimentConfig {
            algorithm,
            n,
            k,
            profile: SizeProfile::Balanced,
            oracle: OracleMode::Perfect,
            side_info: None,
            constants: Constants::default(),
            seeds,
            recall_threshold: None,
            record_timing: false,
            output: None,
            sweep: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn error_rate(&self) -> f64 {
        match self.oracle {
            OracleMode::Perfect => 0.0,
            OracleMode::Faulty { p } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.algorithm;
        if self.seeds.expand().is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::Config(format!("need 1 ≤ k ≤ n, got n = {}, k = {}", self.n, self.k)));
        }
        if !(self.constants.desk_scale > 0.0 && self.constants.desk_scale.is_finite()) {
            return Err(Error::Config(format!("desk_scale must be positive, got {}", self.constants.desk_scale)));
        }
        if let OracleMode::Faulty { p } = self.oracle {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::Config(format!(
                    "error rate p must lie in [0, 1/2), got {p} (lambda = 1/2 − p must be positive)"
                )));
            }
        }
        if a.needs_faulty_oracle() != matches!(self.oracle, OracleMode::Faulty { .. }) {
            let want = if a.needs_faulty_oracle() { "a faulty" } else { "a perfect" };
            return Err(Error::Config(format!("algorithm {a} needs {want} oracle")));
        }
        if a.needs_side_info() && self.side_info.is_none() {
            return Err(Error::Config(format!("algorithm {a} needs side_info")));
        }
        if let Some(s) = &self.side_info {
            s.pmfs().map_err(|e| Error::Config(format!("side_info: {e}")))?;
        }
        if a == Algorithm::Alg2Poly && self.constants.k_hint.is_none() {
            return Err(Error::Config("alg2-poly needs constants.k_hint".into()));
        }
        if let Some(sw) = &self.sweep {
            for &p in &sw.p {
                if !(0.0..0.5).contains(&p) {
                    return Err(Error::Config(format!("sweep p = {p} outside [0, 1/2)")));
                }
            }
            if !sw.p.is_empty() && !a.needs_faulty_oracle() {
                return Err(Error::Config(format!("sweeping p needs a faulty algorithm, not {a}")));
            }
        }
        Ok(())
    }

    /// Concrete configurations of the sweep grid, in row-major order.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let Some(sw) = &self.sweep else { return vec![self.clone()] };
        let ns = if sw.n.is_empty() { vec![self.n] } else { sw.n.clone() };
        let ks = if sw.k.is_empty() { vec![self.k] } else { sw.k.clone() };
        let ps: Vec<Option<f64>> = if sw.p.is_empty() { vec![None] } else { sw.p.iter().map(|&p| Some(p)).collect() };
        let mut out = Vec::new();
        for &n in &ns {
            for &k in &ks {
                for &p in &ps {
                    let mut c = self.clone();
                    c.sweep = None;
                    c.n = n;
                    c.k = k;
                    if let Some(p) = p {
                        c.oracle = OracleMode::Faulty { p };
                    }
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Independent stream seeds for one run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_SIDE: u64 = 1;
const STREAM_ORACLE: u64 = 2;
const STREAM_SAMPLING: u64 = 3;

/// Everything one run needs, built deterministically from the seed.
pub struct Trial {
    pub instance: Instance,
    pub side_info: Option<(SideInfoMatrix, Pmf, Pmf)>,
    pub oracle: OracleSpec,
    pub sampling_seed: u64,
}

impl Trial {
    pub fn build(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let instance = gen_instance(cfg.n, cfg.k, cfg.profile.clone(), seed)?;
        let side_info = match &cfg.side_info {
            Some(spec) => {
                let (fp, fm) = spec.pmfs()?;
                let w = gen_sideinfo(&instance, &fp, &fm, derive_seed(seed, STREAM_SIDE))?;
                Some((w, fp, fm))
            }
            None => None,
        };
        let oracle = OracleSpec { mode: cfg.oracle, seed: derive_seed(seed, STREAM_ORACLE) };
        Ok(Trial { instance, side_info, oracle, sampling_seed: derive_seed(seed, STREAM_SAMPLING) })
    }
}

fn faulty_config(cfg: &ExperimentConfig) -> FaultyConfig {
    FaultyConfig {
        lambda: 0.5 - cfg.error_rate(),
        desk_scale: cfg.constants.desk_scale,
        limits: cfg.constants.limits.clone(),
    }
}

/// Runs the configured algorithm on one trial.
pub fn run_algorithm(cfg: &ExperimentConfig, trial: &Trial) -> Result<(Outcome, OracleSession)> {
    let n = cfg.n;
    let mut session = OracleSession::new(trial.oracle, &trial.instance)?;
    if cfg.algorithm.is_batched() {
        session = session.with_round_cap(cfg.constants.round_cap.unwrap_or_else(|| default_round_cap(n)));
    }
    let side = trial.side_info.as_ref();
    let need = || side.ok_or_else(|| Error::Config(format!("algorithm {} needs side_info", cfg.algorithm)));
    let c = &cfg.constants;
    let round_cfg = || RoundConfig {
        cap: c.round_cap,
        sample_size: c.sample_size,
        faulty: Some(faulty_config(cfg)),
        scorer: c.scorer.clone(),
        seed: trial.sampling_seed,
    };
    let out = match cfg.algorithm {
        Algorithm::Baseline => baseline_nk(&mut session)?,
        Algorithm::Alg1 => alg1_lasvegas(&mut session, &need()?.0, c.scorer.clone())?,
        Algorithm::Alg1aMc => {
            let (w, fp, fm) = need()?;
            alg1a_montecarlo(&mut session, w, fp.mean(), fm.mean(), c.desk_scale)?
        }
        Algorithm::Alg1aLv => {
            let (w, fp, fm) = need()?;
            alg1a_lasvegas(&mut session, w, fp.mean(), fm.mean(), c.desk_scale)?
        }
        Algorithm::AlgDiv => {
            let (w, fp, fm) = need()?;
            alg_div_montecarlo(&mut session, w, fp, fm, c.desk_scale)?
        }
        Algorithm::Alg2 => alg2(&mut session, &faulty_config(cfg))?,
        Algorithm::Alg2Poly => {
            let hint = c.k_hint.ok_or_else(|| Error::Config("alg2-poly needs constants.k_hint".into()))?;
            alg2_poly(&mut session, &faulty_config(cfg), hint)?
        }
        Algorithm::Alg3 => alg3(&mut session, &need()?.0, &faulty_config(cfg), c.scorer.clone())?,
        Algorithm::RoundsNoside => rounds_perfect_noside(&mut session)?,
        Algorithm::RoundsSide => rounds_perfect_side(&mut session, &need()?.0, &round_cfg())?,
        Algorithm::RoundsFaulty => rounds_faulty_noside(&mut session, &round_cfg())?,
    };
    Ok((out, session))
}

/// Reference lower bound matching the algorithm's setting.
pub fn lower_bound(cfg: &ExperimentConfig) -> Result<Extended> {
    let (n, k) = (cfg.n, cfg.k);
    let delta = || -> Result<Extended> {
        let (fp, fm) = cfg.side_info.as_ref().ok_or(Error::Config("missing side_info".into()))?.pmfs()?;
        symmetric_divergence(&fp, &fm)
    };
    Ok(match cfg.algorithm {
        Algorithm::Alg1 | Algorithm::Alg1aLv | Algorithm::RoundsSide => {
            Extended::Finite(lower_bound_lasvegas(n, k, delta()?))
        }
        Algorithm::Alg1aMc | Algorithm::AlgDiv | Algorithm::Alg3 => {
            Extended::Finite(lower_bound_perfect_side(k, delta()?))
        }
        Algorithm::Baseline | Algorithm::RoundsNoside => lower_bound_faulty(n, k, 0.0)?,
        Algorithm::Alg2 | Algorithm::Alg2Poly | Algorithm::RoundsFaulty => lower_bound_faulty(n, k, cfg.error_rate())?,
    })
}

fn check_run(cfg: &ExperimentConfig, out: &Outcome, session: &OracleSession, exact: bool) -> Vec<String> {
    let mut v = Vec::new();
    let (n, k) = (cfg.n, cfg.k);
    let q = session.query_count();
    let a = cfg.algorithm;
    if a.is_las_vegas() && !exact {
        v.push(format!("{a} returned a partition that is not the ground truth"));
    }
    if a == Algorithm::Baseline && q > n * k {
        v.push(format!("baseline asked {q} > nk = {} queries", n * k));
    }
    if matches!(a, Algorithm::Alg1aMc | Algorithm::AlgDiv) {
        if let Some(m) = out.stats.threshold {
            if q > k * k * m {
                v.push(format!("{a} asked {q} > k²M = {} queries", k * k * m));
            }
        }
    }
    if let Some(cap) = session.round_cap() {
        if let Some(&b) = session.ledger().per_round_sizes().iter().find(|&&b| b > cap) {
            v.push(format!("batch of {b} exceeds cap {cap}"));
        }
        let rounds = session.ledger().round_count();
        if q > cap * rounds {
            v.push(format!("{q} queries exceed cap·rounds = {}", cap * rounds));
        }
    }
    if a == Algorithm::RoundsNoside && out.rounds != Some(k) {
        v.push(format!("rounds-noside used {:?} rounds for k = {k}", out.rounds));
    }
    if out.stats.repeated_votes > 0 {
        v.push(format!("{} majority panels were repeated", out.stats.repeated_votes));
    }
    v
}

/// Runs one seed and builds its report.
pub fn run_one(cfg: &ExperimentConfig, seed: u64) -> Result<RunReport> {
    let trial = Trial::build(cfg, seed)?;
    let start = Instant::now();
    let (out, session) = run_algorithm(cfg, &trial)?;
    let elapsed = start.elapsed().as_secs_f64();
    let threshold =
        cfg.recall_threshold.or(if cfg.algorithm == Algorithm::Alg2Poly { out.stats.threshold } else { None });
    let (exact, recall) = compare_clusterings(&out.clustering, &trial.instance, threshold.unwrap_or(1))?;
    let q = session.query_count();
    let bound_ratio = match lower_bound(cfg)? {
        Extended::Finite(b) if b > 0.0 => Some(q as f64 / b),
        _ => None,
    };
    let violations = check_run(cfg, &out, &session, exact);
    Ok(RunReport {
        algorithm: cfg.algorithm.name().to_string(),
        n: cfg.n,
        k: cfg.k,
        p: cfg.error_rate(),
        seed,
        query_count: q,
        round_count: out.rounds.unwrap_or_else(|| session.ledger().round_count()),
        exact_recovery: exact,
        big_cluster_recall: recall,
        bound_ratio,
        wall_time: if cfg.record_timing { elapsed } else { 0.0 },
        violations,
    })
}

/// One report per (configuration, seed), merged in sweep then seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    let jobs: Vec<(ExperimentConfig, u64)> =
        cfg.expand().into_iter().flat_map(|c| c.seeds.expand().into_iter().map(move |s| (c.clone(), s))).collect();
    for (c, _) in &jobs {
        c.validate()?;
    }
    jobs.par_iter().map(|(c, s)| run_one(c, *s)).collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

/// Writes the CSV header and one row per report.
pub fn write_csv(reports: &[RunReport], mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.n,
            r.k,
            r.p,
            r.seed,
            r.query_count,
            r.round_count,
            r.exact_recovery,
            fmt_f64(r.big_cluster_recall),
            r.bound_ratio.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.wall_time),
        )?;
    }
    Ok(())
}

pub fn csv_string(reports: &[RunReport]) -> String {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub runs: usize,
    pub exact_rate: f64,
    pub recall_mean: f64,
    pub queries_mean: f64,
    pub queries_sd: f64,
    pub rounds_mean: f64,
    pub rounds_sd: f64,
    pub bound_ratio_mean: Option<f64>,
    pub violations: usize,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Statistics over reports that share one configuration.
pub fn summarize(reports: &[RunReport]) -> Result<Summary> {
    let first = reports.first().ok_or_else(|| Error::InvalidParameter("cannot summarize zero reports".into()))?;
    let queries: Vec<f64> = reports.iter().map(|r| r.query_count as f64).collect();
    let rounds: Vec<f64> = reports.iter().map(|r| r.round_count as f64).collect();
    let (queries_mean, queries_sd) = mean_sd(&queries);
    let (rounds_mean, rounds_sd) = mean_sd(&rounds);
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.bound_ratio).collect();
    let runs = reports.len();
    Ok(Summary {
        algorithm: first.algorithm.clone(),
        n: first.n,
        k: first.k,
        p: first.p,
        runs,
        exact_rate: reports.iter().filter(|r| r.exact_recovery).count() as f64 / runs as f64,
        recall_mean: reports.iter().map(|r| r.big_cluster_recall).sum::<f64>() / runs as f64,
        queries_mean,
        queries_sd,
        rounds_mean,
        rounds_sd,
        bound_ratio_mean: if ratios.is_empty() { None } else { Some(mean_sd(&ratios).0) },
        violations: reports.iter().map(|r| r.violations.len()).sum(),
    })
}

/// Summaries per `(algorithm, n, k, p)` in first-appearance order.
pub fn summarize_groups(reports: &[RunReport]) -> Result<Vec<Summary>> {
    let mut keys: Vec<(String, usize, usize, u64)> = Vec::new();
    for r in reports {
        let key = (r.algorithm.clone(), r.n, r.k, r.p.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|key| {
            let group: Vec<RunReport> = reports
                .iter()
                .filter(|r| (r.algorithm.as_str(), r.n, r.k, r.p.to_bits()) == (key.0.as_str(), key.1, key.2, key.3))
                .cloned()
                .collect();
            summarize(&group)
        })
        .collect()
}
