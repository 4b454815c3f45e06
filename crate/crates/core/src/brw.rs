//! Discrete-time branching random walk.
//!
//! Each generation every particle is replaced by an independent number of
//! offspring drawn from the reproduction law, and every newborn takes one
//! simple-random-walk step from its parent's vertex.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::dist::{DistError, OffspringDistribution};
use crate::tree::{TreeError, TreeStore, VertexId};
use crate::walk::WalkError;

/// Default population cap; a trajectory exceeding it is classified as surviving.
pub const DEFAULT_POP_CAP: u64 = 1_000_000;

/// Below this many parents, [`run_gw_totals`] samples offspring one by one.
const BATCH_THRESHOLD: u64 = 64;

/// Particle configuration at one generation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BrwState {
    generation: u32,
    occupancy: BTreeMap<VertexId, u64>,
    total: u64,
    capped: bool,
}

impl BrwState {
    /// One particle at `v`, generation 0.
    pub fn single(v: VertexId) -> Self {
        Self { generation: 0, occupancy: BTreeMap::from([(v, 1)]), total: 1, capped: false }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_extinct(&self) -> bool {
        self.total == 0
    }

    /// Set once a step pushes the population above the cap.
    pub fn is_capped(&self) -> bool {
        self.capped
    }

    /// `N_n(v)`.
    pub fn at(&self, v: VertexId) -> u64 {
        self.occupancy.get(&v).copied().unwrap_or(0)
    }

    pub fn occupancy(&self) -> &BTreeMap<VertexId, u64> {
        &self.occupancy
    }

    /// Whether every occupied vertex has depth parity equal to the
    /// generation's parity (given a start at the root).
    pub fn parity_holds(&self, store: &TreeStore) -> bool {
        self.occupancy.keys().all(|&v| store.depth(v).map(|d| d % 2 == self.generation % 2).unwrap_or(false))
    }
}

/// Advances `state` by one generation.
pub fn brw_step<R: Rng + ?Sized>(
    state: &BrwState,
    store: &mut TreeStore,
    law: &OffspringDistribution,
    rng: &mut R,
    pop_cap: u64,
) -> Result<BrwState, TreeError> {
    let mut next: BTreeMap<VertexId, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut per_neighbor: Vec<u64> = Vec::new();
    for (&v, &count) in &state.occupancy {
        let deg = store.degree(v)?;
        per_neighbor.clear();
        per_neighbor.resize(deg as usize, 0);
        for _ in 0..count {
            for _ in 0..law.sample(rng) {
                per_neighbor[rng.random_range(0..deg) as usize] += 1;
            }
        }
        for (j, &n) in per_neighbor.iter().enumerate() {
            if n > 0 {
                *next.entry(store.neighbor(v, j as u32)?).or_insert(0) += n;
                total += n;
            }
        }
    }
    Ok(BrwState { generation: state.generation + 1, occupancy: next, total, capped: state.capped || total > pop_cap })
}

/// Outcome of one BRW trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrwSummary {
    /// Population per generation, starting with generation 0.
    pub totals: Vec<u64>,
    /// `N_n(root)` per generation; empty when positions were not tracked.
    pub root_counts: Vec<u64>,
    pub extinct: bool,
    pub capped: bool,
    /// Number of generations `n >= 1` reached with a non-empty population.
    pub generations_survived: u32,
    /// Number of generations `n >= 1` with at least one particle at the root.
    pub root_returns: u32,
}

impl BrwSummary {
    fn from_series(totals: Vec<u64>, root_counts: Vec<u64>, capped: bool) -> Self {
        let extinct = totals.last().copied() == Some(0);
        let generations_survived = totals.iter().skip(1).filter(|&&t| t > 0).count() as u32;
        let root_returns = root_counts.iter().skip(1).filter(|&&c| c > 0).count() as u32;
        Self { totals, root_counts, extinct, capped, generations_survived, root_returns }
    }

    /// Whether the population was alive at generation `n` (capped runs count
    /// as alive at every later generation).
    pub fn alive_at(&self, n: usize) -> bool {
        match self.totals.get(n) {
            Some(&t) => t > 0,
            None => self.capped,
        }
    }
}

/// Runs a BRW from one particle at the root for up to `horizon` generations,
/// stopping early on extinction or once the population exceeds `pop_cap`.
pub fn run_brw<R: Rng + ?Sized>(
    store: &mut TreeStore,
    law: &OffspringDistribution,
    horizon: u32,
    pop_cap: u64,
    rng: &mut R,
) -> Result<BrwSummary, TreeError> {
    let mut state = BrwState::single(VertexId::ROOT);
    let mut totals = vec![1];
    let mut root_counts = vec![1];
    for _ in 0..horizon {
        state = brw_step(&state, store, law, rng, pop_cap)?;
        debug_assert!(state.parity_holds(store));
        totals.push(state.total());
        root_counts.push(state.at(VertexId::ROOT));
        if state.is_extinct() || state.is_capped() {
            break;
        }
    }
    Ok(BrwSummary::from_series(totals, root_counts, state.is_capped()))
}

/// Total offspring of `parents` independent draws from `law`.
fn total_offspring<R: Rng + ?Sized>(law: &OffspringDistribution, parents: u64, rng: &mut R) -> u64 {
    if parents < BATCH_THRESHOLD {
        return (0..parents).map(|_| law.sample(rng) as u64).sum();
    }
    // multinomial over atoms by sequential conditional binomials
    let mut left = parents;
    let mut mass_left = 1.0f64;
    let mut total = 0u64;
    let atoms: Vec<(u32, f64)> = law.atoms().collect();
    for (i, &(k, p)) in atoms.iter().enumerate() {
        if left == 0 {
            break;
        }
        let n = if i + 1 == atoms.len() || p >= mass_left {
            left
        } else {
            let prob = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(left, prob).expect("valid binomial").sample(rng)
        };
        total += n * k as u64;
        left -= n;
        mass_left -= p;
    }
    total
}

/// The total-population process alone, which is a Galton-Watson process
/// with the reproduction law. Positions are not tracked, so `root_counts`
/// is empty. Distributionally identical to the totals of [`run_brw`].
pub fn run_gw_totals<R: Rng + ?Sized>(
    law: &OffspringDistribution,
    horizon: u32,
    pop_cap: u64,
    rng: &mut R,
) -> BrwSummary {
    let mut totals = vec![1u64];
    let mut current = 1u64;
    let mut capped = false;
    for _ in 0..horizon {
        current = total_offspring(law, current, rng);
        totals.push(current);
        if current > pop_cap {
            capped = true;
            break;
        }
        if current == 0 {
            break;
        }
    }
    BrwSummary::from_series(totals, Vec::new(), capped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BrwPhase {
    /// Dies out almost surely (`mu <= 1`).
    Subcritical,
    /// Survives globally but not locally.
    WeakSurvival,
    /// Survives locally with positive probability.
    StrongSurvival,
}

/// Upper end of the weak-survival window, `(h_min + 1) / (2 sqrt(h_min))`,
/// the reciprocal of the spectral radius.
pub fn strong_survival_threshold(h_min: u32) -> Result<f64, WalkError> {
    if h_min == 0 {
        return Err(WalkError::BadInput("h_min must be at least 1".into()));
    }
    let h = h_min as f64;
    Ok((h + 1.0) / (2.0 * h.sqrt()))
}

/// Phase of a BRW with mean offspring `mu` on a GW tree with minimal
/// offspring `h_min`. The boundary `mu = 1 / r` belongs to the weak phase.
pub fn brw_phase(h_min: u32, mu: f64) -> Result<BrwPhase, WalkError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(WalkError::BadInput(format!("mean offspring must be positive, got {mu}")));
    }
    let threshold = strong_survival_threshold(h_min)?;
    Ok(if mu <= 1.0 {
        BrwPhase::Subcritical
    } else if mu > threshold {
        BrwPhase::StrongSurvival
    } else {
        BrwPhase::WeakSurvival
    })
}

/// Reproduction law of the discrete-time BRW that shares survival behaviour
/// with the continuous-time BRW of birth rate `lambda` and death rate 1:
/// geometric with mean `lambda`.
pub fn continuous_brw_reduction(lambda: f64) -> Result<OffspringDistribution, DistError> {
    OffspringDistribution::geometric_from_rate(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::tree::TreeMode;

    fn tree(d: u32, mode: TreeMode) -> TreeStore {
        TreeStore::new(OffspringDistribution::degenerate(d).unwrap(), mode, 17).unwrap()
    }

    #[test]
    fn empty_state_stays_empty() {
        let mut t = tree(4, TreeMode::Gw);
        let law = OffspringDistribution::degenerate(2).unwrap();
        let mut rng = stream(0, 0, Purpose::Dynamics);
        let next = brw_step(&BrwState::empty(), &mut t, &law, &mut rng, 100).unwrap();
        assert!(next.is_extinct());
        assert_eq!(next.generation(), 1);
    }

    #[test]
    fn no_branching_preserves_total() {
        let mut t = tree(3, TreeMode::Agw);
        let law = OffspringDistribution::degenerate(1).unwrap();
        let mut rng = stream(0, 1, Purpose::Dynamics);
        let s = run_brw(&mut t, &law, 40, 1000, &mut rng).unwrap();
        assert!(s.totals.iter().all(|&x| x == 1));
        assert!(!s.extinct && !s.capped);
    }

    #[test]
    fn forced_doubling_from_root() {
        let mut t = tree(4, TreeMode::Gw);
        let law = OffspringDistribution::degenerate(2).unwrap();
        let mut rng = stream(0, 2, Purpose::Dynamics);
        let s1 = brw_step(&BrwState::single(VertexId::ROOT), &mut t, &law, &mut rng, 100).unwrap();
        assert_eq!(s1.total(), 2);
        for &v in s1.occupancy().keys() {
            assert_eq!(t.parent(v).unwrap(), Some(VertexId::ROOT));
        }
        assert!(s1.parity_holds(&t));
    }

    #[test]
    fn capping_flags_state() {
        let mut t = tree(4, TreeMode::Gw);
        let law = OffspringDistribution::degenerate(3).unwrap();
        let mut rng = stream(0, 3, Purpose::Dynamics);
        let s = run_brw(&mut t, &law, 50, 100, &mut rng).unwrap();
        assert!(s.capped && !s.extinct);
        assert_eq!(s.totals, vec![1, 3, 9, 27, 81, 243]);
        assert!(s.alive_at(40));
    }

    #[test]
    fn phases() {
        assert_eq!(brw_phase(4, 1.2).unwrap(), BrwPhase::WeakSurvival);
        assert_eq!(brw_phase(4, 1.3).unwrap(), BrwPhase::StrongSurvival);
        assert_eq!(brw_phase(1, 1.5).unwrap(), BrwPhase::StrongSurvival);
        assert_eq!(brw_phase(1, 1.0 + 1e-9).unwrap(), BrwPhase::StrongSurvival);
        assert_eq!(brw_phase(4, 1.25).unwrap(), BrwPhase::WeakSurvival);
        assert_eq!(brw_phase(4, 0.5).unwrap(), BrwPhase::Subcritical);
        assert!(brw_phase(0, 1.5).is_err());
        assert!(brw_phase(4, 0.0).is_err());
    }

    #[test]
    fn reduction_is_geometric() {
        let law = continuous_brw_reduction(1.5).unwrap();
        assert!((law.mean() - 1.5).abs() < 1e-9);
        let boundary = continuous_brw_reduction(1.25).unwrap().mean();
        assert!((boundary - 1.25).abs() < 1e-9);
        assert_eq!(brw_phase(4, boundary).unwrap(), BrwPhase::WeakSurvival);
        assert_eq!(brw_phase(4, continuous_brw_reduction(0.5).unwrap().mean()).unwrap(), BrwPhase::Subcritical);
        assert!(continuous_brw_reduction(0.0).is_err());
    }

    #[test]
    fn batched_offspring_matches_mean() {
        let law = OffspringDistribution::geometric_from_rate(1.5).unwrap();
        let mut rng = stream(4, 0, Purpose::Synthetic);
        let parents = 10_000u64;
        let reps = 200;
        let mean = (0..reps).map(|_| total_offspring(&law, parents, &mut rng) as f64).sum::<f64>() / reps as f64;
        let sigma = (law.variance() * parents as f64 / reps as f64).sqrt();
        assert!((mean - 1.5 * parents as f64).abs() < 4.0 * sigma, "{mean}");
    }
}
