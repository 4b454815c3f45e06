//! Offspring laws on the non-negative integers.
//!
//! One type serves both as the tree law (number of children of a vertex) and
//! as the reproduction law of a branching random walk. Tree laws must put no
//! mass at zero; reproduction laws may. The flag [`OffspringDistribution::allows_zero`]
//! records which constructor produced the law.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Normalization tolerance for user-supplied probability maps.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tail mass discarded when truncating geometric laws.
pub const GEOMETRIC_TAIL: f64 = 1e-12;
/// Fixed-point tolerance of the extinction iteration.
pub const EXTINCTION_TOL: f64 = 1e-12;

const MAX_SUPPORT: usize = 1 << 22;
const MAX_EXTINCTION_ITERS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("tree laws must put no mass at 0 offspring")]
    ZeroMass,
    #[error("probabilities sum to {sum}, not 1 (tolerance {NORMALIZATION_TOL:e})")]
    NotNormalized { sum: f64 },
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("invalid probability {p} for k = {k}")]
    InvalidProbability { k: u64, p: f64 },
    #[error("rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("pgf argument {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("support too large ({0} atoms)")]
    SupportTooLarge(usize),
    #[error("bad key {0:?} in explicit distribution (expected a non-negative integer)")]
    BadKey(String),
}

/// How a law was constructed; kept for reporting and serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LawKind {
    Explicit,
    Geometric { mean: f64 },
    Degenerate { d: u32 },
}

/// A probability mass function on `{0, 1, 2, ...}` with finite support.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
    h_min: u32,
    mean: f64,
    allows_zero: bool,
    kind: LawKind,
}

impl OffspringDistribution {
    /// Tree law from an explicit map `k -> p_k`. Rejects any mass at 0.
    pub fn from_map(probs: &BTreeMap<u32, f64>) -> Result<Self, DistError> {
        Self::build(probs, false, LawKind::Explicit)
    }

    /// Reproduction law from an explicit map; mass at 0 is permitted.
    pub fn reproduction_from_map(probs: &BTreeMap<u32, f64>) -> Result<Self, DistError> {
        Self::build(probs, true, LawKind::Explicit)
    }

    /// Point mass at `d >= 1`.
    pub fn degenerate(d: u32) -> Result<Self, DistError> {
        if d == 0 {
            return Err(DistError::ZeroMass);
        }
        let map = BTreeMap::from([(d, 1.0)]);
        Self::build(&map, false, LawKind::Degenerate { d })
    }

    /// Geometric law on `{0, 1, ...}` with mean `rate`:
    /// `p_k = (rate / (1 + rate))^k / (1 + rate)`, truncated once the
    /// remaining tail mass drops below [`GEOMETRIC_TAIL`] and renormalized.
    ///
    /// Has `p_0 > 0`, so it is only usable as a reproduction law.
    pub fn geometric_from_rate(rate: f64) -> Result<Self, DistError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DistError::NonPositiveRate(rate));
        }
        let q = 1.0 / (1.0 + rate);
        let rho = rate / (1.0 + rate);
        let mut probs = Vec::new();
        let mut pk = q;
        // tail after atom k is rho^(k+1)
        let mut tail = rho;
        loop {
            probs.push(pk);
            if tail < GEOMETRIC_TAIL {
                break;
            }
            if probs.len() >= MAX_SUPPORT {
                return Err(DistError::SupportTooLarge(probs.len()));
            }
            pk *= rho;
            tail *= rho;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(Self::from_dense(probs, true, LawKind::Geometric { mean: rate }))
    }

    fn build(map: &BTreeMap<u32, f64>, allows_zero: bool, kind: LawKind) -> Result<Self, DistError> {
        let mut sum = 0.0;
        for (&k, &p) in map {
            if !(p.is_finite() && p >= 0.0) {
                return Err(DistError::InvalidProbability { k: k as u64, p });
            }
            if k == 0 && p > 0.0 && !allows_zero {
                return Err(DistError::ZeroMass);
            }
            sum += p;
        }
        let max_k = match map.iter().filter(|(_, &p)| p > 0.0).map(|(&k, _)| k).max() {
            Some(k) => k as usize,
            None => return Err(DistError::EmptySupport),
        };
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DistError::NotNormalized { sum });
        }
        if max_k + 1 > MAX_SUPPORT {
            return Err(DistError::SupportTooLarge(max_k + 1));
        }
        let mut probs = vec![0.0; max_k + 1];
        for (&k, &p) in map {
            if p > 0.0 {
                probs[k as usize] = p / sum;
            }
        }
        Ok(Self::from_dense(probs, allows_zero, kind))
    }

    fn from_dense(probs: Vec<f64>, allows_zero: bool, kind: LawKind) -> Self {
        let h_min = probs.iter().position(|&p| p > 0.0).expect("non-empty support") as u32;
        let mean = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("non-empty") = 1.0;
        Self { probs, cdf, h_min, mean, allows_zero, kind }
    }

    /// Smallest `k` with `p_k > 0`.
    pub fn h_min(&self) -> u32 {
        self.h_min
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        let m2: f64 = self.probs.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        m2 - self.mean * self.mean
    }

    /// Whether the law was built as a reproduction law (mass at 0 allowed).
    pub fn allows_zero(&self) -> bool {
        self.allows_zero
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    /// `p_k`, zero outside the support.
    pub fn prob(&self, k: u32) -> f64 {
        self.probs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Largest `k` with `p_k > 0`.
    pub fn max_support(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    /// Atoms `(k, p_k)` with positive mass, in increasing `k`.
    pub fn atoms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(k, &p)| (k as u32, p))
    }

    /// `E[g(X)]` as an exact finite sum over the support.
    pub fn expect(&self, mut g: impl FnMut(u32) -> f64) -> f64 {
        self.atoms().map(|(k, p)| p * g(k)).sum()
    }

    /// Inverse-CDF lookup: the smallest `k` with `F(k) > u`, for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u32 {
        let k = self.cdf.partition_point(|&c| c <= u);
        let k = k.min(self.probs.len() - 1);
        // cdf plateaus (zero atoms) never win the search; this guards u rounding.
        k as u32
    }

    /// Draws one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.probs.len() == 1 || self.h_min as usize == self.probs.len() - 1 {
            return self.h_min;
        }
        self.quantile(rng.random::<f64>())
    }

    /// Probability generating function `sum_k p_k s^k` on `[0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(DistError::OutOfDomain(s));
        }
        Ok(self.pgf_unchecked(s))
    }

    fn pgf_unchecked(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// Extinction probability of the Galton-Watson process with this law:
    /// the smallest fixed point of the pgf in `[0, 1]`, by iteration from 0.
    ///
    /// Exactly 1 when the mean is at most 1, except for the point mass at 1
    /// (a single immortal line), which returns 0.
    pub fn extinction_probability(&self) -> f64 {
        if self.prob(1) == 1.0 {
            return 0.0;
        }
        if self.mean <= 1.0 {
            return 1.0;
        }
        if self.prob(0) == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for _ in 0..MAX_EXTINCTION_ITERS {
            let next = self.pgf_unchecked(s);
            if (next - s).abs() < EXTINCTION_TOL {
                return next.min(1.0);
            }
            s = next;
        }
        s
    }

    /// Descriptor that round-trips through [`DistributionSpec`].
    pub fn spec(&self) -> DistributionSpec {
        match self.kind {
            LawKind::Geometric { mean } => DistributionSpec::Geometric { mean },
            LawKind::Degenerate { d } => DistributionSpec::Degenerate { d },
            LawKind::Explicit => {
                DistributionSpec::Explicit { p: self.atoms().map(|(k, p)| (k.to_string(), p)).collect() }
            }
        }
    }
}

/// JSON descriptor of a law:
/// `{"type":"explicit","p":{"4":0.5,"6":0.5}}`, `{"type":"geometric","mean":1.5}`
/// or `{"type":"degenerate","d":4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DistributionSpec {
    Explicit { p: BTreeMap<String, f64> },
    Geometric { mean: f64 },
    Degenerate { d: u32 },
}

impl DistributionSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn parsed_map(p: &BTreeMap<String, f64>) -> Result<BTreeMap<u32, f64>, DistError> {
        p.iter()
            .map(|(k, &v)| k.trim().parse::<u32>().map(|k| (k, v)).map_err(|_| DistError::BadKey(k.clone())))
            .collect()
    }

    /// Builds a tree law (no mass at 0).
    pub fn tree_law(&self) -> Result<OffspringDistribution, DistError> {
        match self {
            Self::Explicit { p } => OffspringDistribution::from_map(&Self::parsed_map(p)?),
            Self::Degenerate { d } => OffspringDistribution::degenerate(*d),
            Self::Geometric { mean } => {
                OffspringDistribution::geometric_from_rate(*mean)?;
                Err(DistError::ZeroMass)
            }
        }
    }

    /// Builds a reproduction law (mass at 0 allowed).
    pub fn reproduction_law(&self) -> Result<OffspringDistribution, DistError> {
        match self {
            Self::Explicit { p } => OffspringDistribution::reproduction_from_map(&Self::parsed_map(p)?),
            Self::Degenerate { d } => OffspringDistribution::degenerate(*d),
            Self::Geometric { mean } => OffspringDistribution::geometric_from_rate(*mean),
        }
    }
}
