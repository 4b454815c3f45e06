//! Simple random walk: return probabilities and spectral radius.
//!
//! On the `(d+1)`-regular tree the distance of a simple random walk from its
//! starting point is a birth-death chain on `{0, 1, 2, ...}` that steps out
//! with probability `d/(d+1)`, in with probability `1/(d+1)`, and is pushed
//! out deterministically from 0. Return probabilities are computed exactly
//! by dynamic programming over that chain.

use rand::Rng;

use crate::tree::{TreeError, TreeStore, VertexId};

/// Largest step count accepted by the DP routines.
pub const MAX_STEPS: usize = 10_000;
/// Smallest horizon accepted by [`spectral_radius_dp_estimate`].
pub const MIN_ESTIMATE_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("return probability requested at odd step {0}; it is identically zero on trees")]
    OddStep(usize),
    #[error("step count {0} exceeds {MAX_STEPS}")]
    TooManySteps(usize),
}

/// Closed-form spectral radius of SRW on a GW tree with minimal offspring
/// `h_min`: 1 if `h_min = 1`, otherwise `2 sqrt(h_min) / (h_min + 1)`.
pub fn spectral_radius_formula(h_min: u32) -> Result<f64, WalkError> {
    match h_min {
        0 => Err(WalkError::BadInput("h_min must be at least 1".into())),
        1 => Ok(1.0),
        h => {
            let h = h as f64;
            Ok(2.0 * h.sqrt() / (h + 1.0))
        }
    }
}

/// Distance-from-start chain of SRW on the `(d+1)`-regular tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceChain {
    d: u32,
}

impl DistanceChain {
    pub fn new(d: u32) -> Result<Self, WalkError> {
        if d == 0 {
            return Err(WalkError::BadInput("branching number d must be at least 1".into()));
        }
        Ok(Self { d })
    }

    pub fn branching(&self) -> u32 {
        self.d
    }

    pub fn p_up(&self) -> f64 {
        self.d as f64 / (self.d as f64 + 1.0)
    }

    pub fn p_down(&self) -> f64 {
        1.0 / (self.d as f64 + 1.0)
    }

    /// One step of the chain applied to `cur`, written into `next`.
    /// States past the end of `next` are dropped.
    fn step(&self, cur: &[f64], next: &mut [f64]) {
        let (up, down) = (self.p_up(), self.p_down());
        next.iter_mut().for_each(|x| *x = 0.0);
        let len = next.len();
        for (k, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if k == 0 {
                if len > 1 {
                    next[1] += mass;
                }
            } else {
                if k + 1 < len {
                    next[k + 1] += mass * up;
                }
                next[k - 1] += mass * down;
            }
        }
    }
}

/// Full distance distribution after `n` steps, indexed `0..=n`.
pub fn distance_distribution(chain: DistanceChain, n: usize) -> Result<Vec<f64>, WalkError> {
    if n > MAX_STEPS {
        return Err(WalkError::TooManySteps(n));
    }
    let mut cur = vec![0.0; n + 2];
    let mut next = vec![0.0; n + 2];
    cur[0] = 1.0;
    for _ in 0..n {
        chain.step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur.truncate(n + 1);
    Ok(cur)
}

/// Return probabilities `P(SRW_m = start)` for every `m` in `0..=n_max`.
/// Odd entries are exactly zero.
pub fn return_probability_series(chain: DistanceChain, n_max: usize) -> Result<Vec<f64>, WalkError> {
    if n_max > MAX_STEPS {
        return Err(WalkError::TooManySteps(n_max));
    }
    // a walker farther than n_max/2 can never be back by n_max
    let width = n_max / 2 + 2;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[0] = 1.0;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    for _ in 0..n_max {
        chain.step(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        out.push(cur[0]);
    }
    Ok(out)
}

/// Natural log of `P(SRW_n = start)`, stable for large `n`: the DP vector is
/// pruned to states that can still return and renormalized every step.
pub fn log_return_probability(chain: DistanceChain, n: usize) -> Result<f64, WalkError> {
    if n % 2 == 1 {
        return Err(WalkError::OddStep(n));
    }
    if n > MAX_STEPS {
        return Err(WalkError::TooManySteps(n));
    }
    let width = n / 2 + 2;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[0] = 1.0;
    let mut log_scale = 0.0;
    for t in 0..n {
        chain.step(&cur, &mut next);
        // at time t+1 only distances <= n - (t+1) can still return
        let reach = (n - t - 1).min(width - 1);
        next[reach + 1..].iter_mut().for_each(|x| *x = 0.0);
        let total: f64 = next.iter().sum();
        log_scale += total.ln();
        next.iter_mut().for_each(|x| *x /= total);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur[0].ln() + log_scale)
}

/// Exact `P(SRW_n = start)` on the `(d+1)`-regular tree, `n` even.
pub fn return_probability_dp(chain: DistanceChain, n: usize) -> Result<f64, WalkError> {
    if n % 2 == 1 {
        return Err(WalkError::OddStep(n));
    }
    if n > MAX_STEPS {
        return Err(WalkError::TooManySteps(n));
    }
    if n <= 1000 {
        return Ok(return_probability_series(chain, n)?[n]);
    }
    Ok(log_return_probability(chain, n)?.exp())
}

/// `P(SRW_n = start)^(1/n)`, a finite-`n` estimate of the spectral radius.
pub fn spectral_radius_dp_estimate(chain: DistanceChain, n_max: usize) -> Result<f64, WalkError> {
    if n_max < MIN_ESTIMATE_STEPS {
        return Err(WalkError::BadInput(format!("n_max must be at least {MIN_ESTIMATE_STEPS}")));
    }
    Ok((log_return_probability(chain, n_max)? / n_max as f64).exp())
}

/// One SRW step from `v`: a uniformly chosen neighbor.
pub fn srw_step<R: Rng + ?Sized>(store: &mut TreeStore, v: VertexId, rng: &mut R) -> Result<VertexId, TreeError> {
    let deg = store.degree(v)?;
    let j = rng.random_range(0..deg);
    store.neighbor(v, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::OffspringDistribution;
    use crate::rng::{stream, Purpose};
    use crate::tree::TreeMode;

    /// Brute-force count of closed walks of length `n` from the root of the
    /// `(d+1)`-regular tree, over all `(d+1)^n` neighbor sequences.
    fn brute_force_return(d: u32, n: u32) -> f64 {
        let deg = (d + 1) as u64;
        let mut closed = 0u64;
        for code in 0..deg.pow(n) {
            // track distance only; a step back is the unique neighbor index `d`
            // when away from the root, any index from the root goes outward
            let (mut c, mut dist) = (code, 0u32);
            for _ in 0..n {
                let j = c % deg;
                c /= deg;
                if dist == 0 || j != d as u64 {
                    dist += 1;
                } else {
                    dist -= 1;
                }
            }
            closed += u64::from(dist == 0);
        }
        closed as f64 / deg.pow(n) as f64
    }

    #[test]
    fn formula_values() {
        assert_eq!(spectral_radius_formula(1).unwrap(), 1.0);
        assert!((spectral_radius_formula(4).unwrap() - 0.8).abs() < 1e-15);
        assert!((spectral_radius_formula(6).unwrap() - 0.699_854).abs() < 1e-6);
        assert!(spectral_radius_formula(0).is_err());
    }

    #[test]
    fn small_return_probabilities() {
        let c = DistanceChain::new(4).unwrap();
        assert_eq!(return_probability_dp(c, 0).unwrap(), 1.0);
        assert!((return_probability_dp(c, 2).unwrap() - 0.2).abs() < 1e-15);
        for n in [2, 4, 6] {
            let bf = brute_force_return(4, n);
            assert!((return_probability_dp(c, n as usize).unwrap() - bf).abs() < 1e-14, "n={n}");
        }
        assert!((brute_force_return(4, 4) - 0.072).abs() < 1e-15);
    }

    #[test]
    fn odd_steps() {
        let c = DistanceChain::new(3).unwrap();
        assert_eq!(return_probability_dp(c, 7).unwrap_err(), WalkError::OddStep(7));
        let s = return_probability_series(c, 50).unwrap();
        assert!(s.iter().skip(1).step_by(2).all(|&p| p == 0.0));
    }

    #[test]
    fn log_route_agrees_with_plain_route() {
        let c = DistanceChain::new(5).unwrap();
        for n in [2, 10, 100, 400] {
            let plain = return_probability_series(c, n).unwrap()[n];
            let logged = log_return_probability(c, n).unwrap().exp();
            assert!((plain - logged).abs() <= 1e-12 * plain, "n={n}: {plain} vs {logged}");
        }
    }

    #[test]
    fn distribution_rows_sum_to_one() {
        let c = DistanceChain::new(4).unwrap();
        for n in [0, 1, 7, 100, 333] {
            let s: f64 = distance_distribution(c, n).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n}: {s}");
        }
    }

    #[test]
    fn dp_estimates_near_formula() {
        for d in [4u32, 6] {
            let est = spectral_radius_dp_estimate(DistanceChain::new(d).unwrap(), 1000).unwrap();
            let r = spectral_radius_formula(d).unwrap();
            assert!(est <= r && est >= r * 0.985, "d={d}: {est} vs {r}");
        }
        let line = spectral_radius_dp_estimate(DistanceChain::new(1).unwrap(), 1000).unwrap();
        assert!(line < 1.0 && line > 0.99, "{line}");
        assert!(spectral_radius_dp_estimate(DistanceChain::new(4).unwrap(), 50).is_err());
        assert!(return_probability_dp(DistanceChain::new(4).unwrap(), 10_002).is_err());
    }

    #[test]
    fn srw_step_from_root_is_uniform() {
        let mut t = TreeStore::new(OffspringDistribution::degenerate(4).unwrap(), TreeMode::Gw, 3).unwrap();
        let mut rng = stream(1, 0, Purpose::Synthetic);
        let n = 100_000;
        let mut counts = [0u32; 5];
        for _ in 0..n {
            counts[srw_step(&mut t, VertexId::ROOT, &mut rng).unwrap().index()] += 1;
        }
        assert_eq!(counts[0], 0);
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 / n as f64 - 0.25).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn srw_step_to_parent_one_in_five() {
        let mut t = TreeStore::new(OffspringDistribution::degenerate(4).unwrap(), TreeMode::Gw, 3).unwrap();
        let v = t.children(VertexId::ROOT).unwrap().get(1).unwrap();
        let mut rng = stream(2, 0, Purpose::Synthetic);
        let n = 100_000;
        let up = (0..n).filter(|_| srw_step(&mut t, v, &mut rng).unwrap() == VertexId::ROOT).count();
        let sigma = (0.2 * 0.8 / n as f64).sqrt();
        assert!((up as f64 / n as f64 - 0.2).abs() < 4.0 * sigma);
    }

    #[test]
    fn srw_step_deterministic() {
        let law = OffspringDistribution::degenerate(3).unwrap();
        let walk = |seed| {
            let mut t = TreeStore::new(law.clone(), TreeMode::Agw, 9).unwrap();
            let mut rng = stream(seed, 0, Purpose::Dynamics);
            let mut v = VertexId::ROOT;
            (0..50)
                .map(|_| {
                    v = srw_step(&mut t, v, &mut rng).unwrap();
                    t.path_label(v).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(walk(4), walk(4));
        assert_ne!(walk(4), walk(5));
    }
}
