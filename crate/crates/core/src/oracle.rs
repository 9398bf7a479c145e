//! Simulated pairwise oracles. A session is the only channel through which
//! an algorithm observes the ground truth: it exposes `n`, single queries,
//! batched rounds, and the ledger, never the labels.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::pair_uniform;
use crate::types::{Answer, Instance, LedgerExport, Pair, QueryLedger};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum OracleMode {
    Perfect,
    /// Binary symmetric channel: each answer flipped with probability `p`.
    Faulty {
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    #[serde(flatten)]
    pub mode: OracleMode,
    #[serde(default)]
    pub seed: u64,
}

impl OracleSpec {
    pub fn perfect(seed: u64) -> Self {
        OracleSpec { mode: OracleMode::Perfect, seed }
    }

    pub fn faulty(p: f64, seed: u64) -> Result<Self> {
        let spec = OracleSpec { mode: OracleMode::Faulty { p }, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            OracleMode::Perfect => Ok(()),
            OracleMode::Faulty { p } if (0.0..0.5).contains(&p) => Ok(()),
            OracleMode::Faulty { p } => {
                Err(Error::InvalidParameter(format!("error rate p must lie in [0, 1/2), got {p}")))
            }
        }
    }

    /// Error rate, 0 for a perfect oracle.
    pub fn error_rate(&self) -> f64 {
        match self.mode {
            OracleMode::Perfect => 0.0,
            OracleMode::Faulty { p } => p,
        }
    }

    /// `λ = ½ − p`.
    pub fn lambda(&self) -> f64 {
        0.5 - self.error_rate()
    }
}

/// Default batch cap `⌈n log2 n⌉`.
pub fn default_round_cap(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let nf = n as f64;
    (nf * nf.log2()).ceil() as usize
}

pub struct OracleSession {
    spec: OracleSpec,
    labels: Vec<usize>,
    memo: HashMap<Pair, Answer>,
    ledger: QueryLedger,
    round_cap: Option<usize>,
}

impl OracleSession {
    pub fn new(spec: OracleSpec, truth: &Instance) -> Result<Self> {
        spec.validate()?;
        Ok(OracleSession {
            spec,
            labels: truth.labels.clone(),
            memo: HashMap::new(),
            ledger: QueryLedger::default(),
            round_cap: None,
        })
    }

    pub fn with_round_cap(mut self, cap: usize) -> Self {
        self.round_cap = Some(cap);
        self
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn round_cap(&self) -> Option<usize> {
        self.round_cap
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn query_count(&self) -> usize {
        self.ledger.query_count()
    }

    pub fn export_ledger(&self) -> LedgerExport {
        self.ledger.export()
    }

    /// Whether the pair has been asked before (free to re-ask).
    pub fn is_known(&self, u: usize, v: usize) -> bool {
        self.memo.contains_key(&Pair::new(u, v))
    }

    fn check(&self, u: usize, v: usize) -> Result<Pair> {
        let n = self.n();
        for x in [u, v] {
            if x >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
        }
        if u == v {
            return Err(Error::SelfQuery(u));
        }
        Ok(Pair::new(u, v))
    }

    fn answer(&mut self, pair: Pair) -> Answer {
        if let Some(&a) = self.memo.get(&pair) {
            return a;
        }
        let truth = Answer::from_same(self.labels[pair.lo()] == self.labels[pair.hi()]);
        let a = match self.spec.mode {
            OracleMode::Perfect => truth,
            OracleMode::Faulty { p } => {
                if pair_uniform(self.spec.seed, pair.lo(), pair.hi()) < p {
                    truth.flipped()
                } else {
                    truth
                }
            }
        };
        self.memo.insert(pair, a);
        self.ledger.record(pair);
        a
    }

    pub fn query(&mut self, u: usize, v: usize) -> Result<Answer> {
        let pair = self.check(u, v)?;
        Ok(self.answer(pair))
    }

    /// Answers one round of pairs chosen before any of them is seen.
    ///
    /// An empty batch consumes no round. Batches larger than the cap are
    /// rejected; splitting is the caller's job.
    pub fn batch_query(&mut self, pairs: &[(usize, usize)]) -> Result<Vec<Answer>> {
        let cap = self.round_cap.ok_or(Error::NoRoundCap)?;
        if pairs.len() > cap {
            return Err(Error::BatchExceedsCap { size: pairs.len(), cap });
        }
        let checked = pairs.iter().map(|&(u, v)| self.check(u, v)).collect::<Result<Vec<_>>>()?;
        if checked.is_empty() {
            return Ok(Vec::new());
        }
        self.ledger.record_round(checked.len());
        Ok(checked.into_iter().map(|p| self.answer(p)).collect())
    }
}
