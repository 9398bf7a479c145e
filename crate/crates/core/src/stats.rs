//! Discrete distributions and the information-theoretic quantities used by
//! the algorithms: KL divergence, symmetric divergence, total variation, the
//! Chernoff-type exponent of the divergence test, query thresholds and
//! lower-bound reference values. Logs are natural throughout.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-9;

/// A pmf on a strictly increasing support grid in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct Pmf {
    support: Vec<f64>,
    mass: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    support: Vec<f64>,
    mass: Vec<f64>,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;
    fn try_from(raw: RawPmf) -> Result<Self> {
        Pmf::new(raw.support, raw.mass)
    }
}

impl Pmf {
    pub fn new(support: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(Error::InvalidPmf(format!("{} support points but {} masses", support.len(), mass.len())));
        }
        if support.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidPmf("support outside [0, 1]".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPmf("support not strictly increasing".into()));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidPmf("negative or non-finite mass".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("masses sum to {total}")));
        }
        Ok(Pmf { support, mass })
    }

    /// Normalizes nonnegative counts on `support`.
    pub fn from_counts(support: &[f64], counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidPmf("no observations".into()));
        }
        Pmf::new(support.to_vec(), counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// Bernoulli on the grid `{0, 1}` with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Pmf::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn point_mass(support: Vec<f64>, at: usize) -> Result<Self> {
        let mut mass = vec![0.0; support.len()];
        *mass.get_mut(at).ok_or_else(|| Error::InvalidPmf("point mass index out of range".into()))? = 1.0;
        Pmf::new(support, mass)
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let q = support.len() as f64;
        let mass = vec![1.0 / q; support.len()];
        Pmf::new(support, mass)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.mass).map(|(a, m)| a * m).sum()
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the support point reached by inverse-CDF sampling at `u ∈ [0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, m) in self.mass.iter().enumerate() {
            acc += m;
            if u < acc {
                return i;
            }
        }
        // Round-off at the top end: fall back to the last point with mass.
        self.mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
    }

    pub fn same_support(&self, other: &Pmf) -> bool {
        self.support == other.support
    }

    fn check_support(&self, other: &Pmf) -> Result<()> {
        if self.same_support(other) {
            Ok(())
        } else {
            Err(Error::SupportMismatch)
        }
    }
}

/// A nonnegative real or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn from_f64(x: f64) -> Self {
        if x.is_infinite() {
            Extended::Infinite
        } else {
            Extended::Finite(x)
        }
    }

    /// The value as an `f64`, with `+∞` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }
}

impl Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).ln();
        }
    }
    // Cancellation can leave a tiny negative residue when p ≈ q.
    d.max(0.0)
}

/// `D(p ‖ q)` in nats.
pub fn kl(p: &Pmf, q: &Pmf) -> Result<Extended> {
    p.check_support(q)?;
    Ok(Extended::from_f64(kl_raw(&p.mass, &q.mass)))
}

/// `Δ(p, q) = D(p ‖ q) + D(q ‖ p)`.
pub fn symmetric_divergence(p: &Pmf, q: &Pmf) -> Result<Extended> {
    Ok(kl(p, q)? + kl(q, p)?)
}

/// Total variation distance, half the ℓ1 distance.
pub fn tv(p: &Pmf, q: &Pmf) -> Result<f64> {
    p.check_support(q)?;
    Ok(tv_raw(&p.mass, &q.mass))
}

pub(crate) fn tv_raw(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `D(p ‖ 1 − p)` for Bernoulli answers: `(1 − 2p) ln((1 − p)/p)`.
pub fn binary_kl(p: f64) -> Result<Extended> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(Extended::Infinite);
    }
    Ok(Extended::Finite(((1.0 - 2.0 * p) * ((1.0 - p) / p).ln()).max(0.0)))
}

/// Symmetric divergence of two equal-variance normals, `(μ1 − μ2)² / σ²`.
pub fn gaussian_delta(mu1: f64, mu2: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let d = mu1 - mu2;
    Ok(d * d / (sigma * sigma))
}

/// Means of `f+`, `f−` and their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub theta_gap: f64,
}

impl GapParams {
    pub fn new(mu_plus: f64, mu_minus: f64) -> Self {
        GapParams { mu_plus, mu_minus, theta_gap: mu_plus - mu_minus }
    }

    pub fn from_pmfs(f_plus: &Pmf, f_minus: &Pmf) -> Self {
        GapParams::new(f_plus.mean(), f_minus.mean())
    }
}

/// `min D(p ‖ f+)` over `{p : D(p ‖ f+) = D(p ‖ f−)}`.
///
/// The minimizer lies on the geometric mixture `p_λ ∝ f+^λ f−^(1−λ)`;
/// `λ` is bisected until the two divergences agree to within `1e-10`.
/// Identical inputs give `0`.
pub fn chernoff_exponent(f_plus: &Pmf, f_minus: &Pmf) -> Result<f64> {
    f_plus.check_support(f_minus)?;
    if f_plus.min_mass() <= 0.0 || f_minus.min_mass() <= 0.0 {
        return Err(Error::InvalidPmf("divergence test needs strictly positive pmfs".into()));
    }
    let (fp, fm) = (&f_plus.mass, &f_minus.mass);
    let log_ratio: Vec<f64> = fp.iter().zip(fm).map(|(a, b)| (b / a).ln()).collect();
    let tilt = |lambda: f64| -> Vec<f64> {
        let w: Vec<f64> = fp.iter().zip(fm).map(|(a, b)| a.powf(lambda) * b.powf(1.0 - lambda)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    // D(p‖f+) − D(p‖f−) = Σ p ln(f−/f+), linear in p.
    let gap = |p: &[f64]| p.iter().zip(&log_ratio).map(|(a, r)| a * r).sum::<f64>();

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (g_lo, g_hi) = (gap(fm), gap(fp));
    if g_lo.abs() <= 1e-10 && g_hi.abs() <= 1e-10 {
        return Ok(0.0);
    }
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::InvalidParameter("exponent bisection does not bracket a root".into()));
    }
    let mut p = tilt(0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        p = tilt(mid);
        let g = gap(&p);
        if g.abs() <= 1e-10 || hi - lo < 1e-16 {
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(kl_raw(&p, fp))
}

/// `⌈x⌉` that ignores float noise just above an integer.
pub fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

fn ln_count(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n ≥ 2, got {n}")));
    }
    Ok((n as f64).ln())
}

fn check_scale(desk_scale: f64) -> Result<()> {
    if desk_scale > 0.0 && desk_scale.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("desk_scale must be positive, got {desk_scale}")))
    }
}

/// `⌈s · 6 ln n / θ²⌉` given `ln n` directly.
pub fn threshold_m_mean_ln(ln_n: f64, theta_gap: f64, desk_scale: f64) -> Result<usize> {
    check_scale(desk_scale)?;
    if !(theta_gap > 0.0) {
        return Err(Error::InvalidParameter(format!("theta_gap must be positive, got {theta_gap}")));
    }
    Ok(ceil_count(desk_scale * 6.0 * ln_n / (theta_gap * theta_gap)))
}

/// Cluster size after which mean-based estimation takes over.
pub fn threshold_m_mean(n: usize, theta_gap: f64, desk_scale: f64) -> Result<usize> {
    threshold_m_mean_ln(ln_count(n)?, theta_gap, desk_scale)
}

/// `⌈s · 16 ln n / (ε Δ)⌉`: cluster size making the TV membership reliable.
pub fn threshold_m_tv(n: usize, eps: f64, delta: f64, desk_scale: f64) -> Result<usize> {
    check_scale(desk_scale)?;
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("eps and delta must be positive, got {eps}, {delta}")));
    }
    Ok(ceil_count(desk_scale * 16.0 * ln_count(n)? / (eps * delta)))
}

/// `⌈s · 8 ln n / E⌉` with `E` the Chernoff exponent of `(f+, f−)`.
pub fn threshold_m_div(n: usize, f_plus: &Pmf, f_minus: &Pmf, desk_scale: f64) -> Result<usize> {
    check_scale(desk_scale)?;
    let e = chernoff_exponent(f_plus, f_minus)?;
    if !(e > 0.0) {
        return Err(Error::InvalidParameter("f+ and f− are indistinguishable (exponent 0)".into()));
    }
    Ok(ceil_count(desk_scale * 8.0 * ln_count(n)? / e))
}

/// `(c, c′) = (6/λ², 36/λ²)`, both scaled.
pub fn faulty_constants(lambda: f64, desk_scale: f64) -> Result<(f64, f64)> {
    check_scale(desk_scale)?;
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1/2], got {lambda}")));
    }
    let c = 6.0 / (lambda * lambda);
    Ok((desk_scale * c, desk_scale * 6.0 * c))
}

/// Reference value `k² / Δ` (Ω-constant taken as 1).
pub fn lower_bound_perfect_side(k: usize, delta: Extended) -> f64 {
    match delta {
        Extended::Infinite => 0.0,
        Extended::Finite(d) => (k * k) as f64 / d,
    }
}

/// Reference value `n + k² / min(1, Δ)`.
pub fn lower_bound_lasvegas(n: usize, k: usize, delta: Extended) -> f64 {
    let d = match delta {
        Extended::Infinite => 1.0,
        Extended::Finite(d) => d.min(1.0),
    };
    n as f64 + (k * k) as f64 / d
}

/// Reference value `nk / D(p ‖ 1 − p)`, or `nk` for a perfect oracle.
pub fn lower_bound_faulty(n: usize, k: usize, p: f64) -> Result<Extended> {
    let nk = (n * k) as f64;
    if p == 0.0 {
        return Ok(Extended::Finite(nk));
    }
    Ok(match binary_kl(p)? {
        Extended::Finite(d) if d > 0.0 => Extended::Finite(nk / d),
        Extended::Finite(_) => Extended::Infinite,
        Extended::Infinite => Extended::Finite(0.0),
    })
}
