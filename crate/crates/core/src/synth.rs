//! Seeded generation of ground-truth instances and side-information matrices.
//!
//! Pair-level randomness is counter-based: the draw for an unordered pair
//! `(u, v)` is read from a ChaCha stream at a word offset derived from the
//! pair, so results do not depend on generation order.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Pmf;
use crate::types::{Instance, Pair};

/// How cluster sizes are drawn.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SizeProfile {
    /// Near-equal sizes; the remainder of `n / k` goes one per cluster.
    #[default]
    Balanced,
    /// Geometric sizes with largest/smallest ratio `ratio`.
    Skewed { ratio: f64 },
    /// Sizes proportional to `(i + 1)^(−alpha)`.
    Powerlaw { alpha: f64 },
}

impl SizeProfile {
    /// Cluster sizes, each at least 1, summing to `n`, largest first.
    pub fn sizes(&self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > n {
            return Err(Error::InfeasibleProfile(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
        }
        let weights: Vec<f64> = match *self {
            SizeProfile::Balanced => {
                let (q, r) = (n / k, n % k);
                return Ok((0..k).map(|i| q + usize::from(i < r)).collect());
            }
            SizeProfile::Skewed { ratio } => {
                if !(ratio >= 1.0 && ratio.is_finite()) {
                    return Err(Error::InfeasibleProfile(format!("skew ratio must be ≥ 1, got {ratio}")));
                }
                let denom = (k.max(2) - 1) as f64;
                (0..k).map(|i| ratio.powf((k - 1 - i) as f64 / denom)).collect()
            }
            SizeProfile::Powerlaw { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InfeasibleProfile(format!("power-law alpha must be > 0, got {alpha}")));
                }
                (0..k).map(|i| ((i + 1) as f64).powf(-alpha)).collect()
            }
        };
        Ok(apportion(n, &weights))
    }
}

/// Largest-remainder apportionment of `n` with one unit reserved per slot.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let k = weights.len();
    let spare = (n - k) as f64;
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| spare * w / total).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| 1 + q.floor() as usize).collect();
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Draws an instance; deterministic in `seed`, labels shuffled uniformly.
pub fn gen_instance(n: usize, k: usize, profile: SizeProfile, seed: u64) -> Result<Instance> {
    let sizes = profile.sizes(n, k)?;
    let mut labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);
    Instance::new(labels, k, profile, seed)
}

/// Uniform `[0, 1)` value for an unordered pair, read counter-style from the
/// ChaCha stream keyed by `seed`.
pub fn pair_uniform(seed: u64, u: usize, v: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(Pair::new(u, v).triangle_index()) * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Symmetric similarity matrix with entries on a shared support grid.
///
/// Entries are stored as grid indices in the row-major lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoMatrix {
    n: usize,
    support: Vec<f64>,
    index: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct SideInfoHeader {
    n: usize,
    support: Vec<f64>,
}

const SIDEINFO_MAGIC: &str = "CCSIDE1";

impl SideInfoMatrix {
    pub fn from_fn(n: usize, support: Vec<f64>, mut index: impl FnMut(usize, usize) -> usize) -> Result<Self> {
        if support.is_empty() || support.len() > 256 {
            return Err(Error::InvalidParameter(format!("support size {} outside 1..=256", support.len())));
        }
        let mut idx = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for hi in 1..n {
            for lo in 0..hi {
                let i = index(lo, hi);
                if i >= support.len() {
                    return Err(Error::InvalidParameter(format!("grid index {i} out of range")));
                }
                idx.push(i as u8);
            }
        }
        Ok(SideInfoMatrix { n, support, index: idx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// Grid index of `w(u, v)`. Panics on the diagonal.
    #[inline]
    pub fn grid_index(&self, u: usize, v: usize) -> usize {
        assert!(u != v, "diagonal of W is unused");
        self.index[Pair::new(u, v).triangle_index() as usize] as usize
    }

    #[inline]
    pub fn value(&self, u: usize, v: usize) -> f64 {
        self.support[self.grid_index(u, v)]
    }

    /// Writes the header line and lower-triangle grid indices.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = SideInfoHeader { n: self.n, support: self.support.clone() };
        writeln!(w, "{SIDEINFO_MAGIC} {}", serde_json::to_string(&header)?)?;
        w.write_all(&self.index)?;
        Ok(())
    }

    pub fn read_from(mut r: impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let json = line
            .trim_end_matches('\n')
            .strip_prefix(SIDEINFO_MAGIC)
            .ok_or_else(|| Error::Format("missing magic".into()))?;
        let header: SideInfoHeader = serde_json::from_str(json.trim())?;
        let expected = header.n * header.n.saturating_sub(1) / 2;
        let mut index = Vec::with_capacity(expected);
        r.read_to_end(&mut index)?;
        if index.len() != expected {
            return Err(Error::Format(format!("expected {expected} entries, found {}", index.len())));
        }
        if header.support.is_empty() || index.iter().any(|&i| i as usize >= header.support.len()) {
            return Err(Error::Format("grid index out of range".into()));
        }
        Ok(SideInfoMatrix { n: header.n, support: header.support, index })
    }

    /// `u,v,w` rows for every pair `u < v`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "u,v,w")?;
        for u in 0..self.n {
            for v in u + 1..self.n {
                writeln!(w, "{u},{v},{}", self.value(u, v))?;
            }
        }
        Ok(())
    }
}

/// Draws `W`: each pair independently from `f_plus` if co-clustered in the
/// truth, else from `f_minus`.
pub fn gen_sideinfo(inst: &Instance, f_plus: &Pmf, f_minus: &Pmf, seed: u64) -> Result<SideInfoMatrix> {
    if !f_plus.same_support(f_minus) {
        return Err(Error::SupportMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = inst.n;
    // Rows are laid out consecutively in the stream, so one sequential pass
    // reads exactly the words `pair_uniform` would address.
    SideInfoMatrix::from_fn(n, f_plus.support().to_vec(), |lo, hi| {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if inst.same_cluster(lo, hi) {
            f_plus.sample_index(u)
        } else {
            f_minus.sample_index(u)
        }
    })
}

/// Quantizes the perturbed-uniform densities onto `grid_size` equal cells.
///
/// `f−` has density `1 + ε` on `[0, ½)` and `1 − ε` on `[½, 1]`; `f+` is the
/// mirror image. Support points are cell midpoints. Returns `(f+, f−)`.
pub fn example2_pmfs(eps: f64, grid_size: usize) -> Result<(Pmf, Pmf)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [0, 1), got {eps}")));
    }
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid_size must be positive".into()));
    }
    let g = grid_size as f64;
    let support: Vec<f64> = (0..grid_size).map(|i| (i as f64 + 0.5) / g).collect();
    let mut minus = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let (a, b) = (i as f64 / g, (i + 1) as f64 / g);
        let low = (b.min(0.5) - a).max(0.0);
        let high = (b - a.max(0.5)).max(0.0);
        minus.push((1.0 + eps) * low + (1.0 - eps) * high);
    }
    let plus: Vec<f64> = minus.iter().rev().copied().collect();
    Ok((Pmf::new(support.clone(), plus)?, Pmf::new(support, minus)?))
}

/// Samples `m` distinct items from `pool` without replacement.
pub(crate) fn sample_without_replacement<R: Rng>(rng: &mut R, pool: &[usize], m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = pool.choose_multiple(rng, m.min(pool.len())).copied().collect();
    out.sort_unstable();
    out
}
