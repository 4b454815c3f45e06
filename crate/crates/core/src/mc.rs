//! Monte Carlo harness: batched independent trials, survival estimates with
//! Wilson intervals, and bisection for empirical critical values.
//!
//! Survival is observed through finite-horizon proxies:
//!
//! * global: alive at the horizon, or capped, or an infection left the depth cap;
//! * local: the root occupied during the final quarter of the horizon, or capped.
//!
//! Trial `i` draws its tree from `derive_seed(master, i, Tree)` and its
//! dynamics from `stream(master, i, Dynamics)`, so results do not depend on
//! the number of worker threads.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brw::{run_brw, run_gw_totals, DEFAULT_POP_CAP};
use crate::cp::{run_cp_coupled, CpCaps, CpError};
use crate::dist::{DistError, OffspringDistribution};
use crate::rng::{derive_seed, stream, Purpose};
use crate::tree::{TreeError, TreeMode, TreeStore};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;
/// Survival probability regarded as effectively zero by [`bisect_critical`].
pub const THRESHOLD: f64 = 0.02;
/// Bisection stops after this many midpoints even if `tol` is not reached.
const MAX_BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("invalid plan: {0}")]
    BadPlan(String),
    #[error(
        "bracket [{lo}, {hi}] does not separate: need ci_low <= {threshold} at the lower end \
         (got {lo_ci_low:.4}) and ci_low > {threshold} at the upper end (got {hi_ci_low:.4})"
    )]
    BracketNotSeparating { lo: f64, hi: f64, lo_ci_low: f64, hi_ci_low: f64, threshold: f64 },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Cp(#[from] CpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurvivalMode {
    Global,
    Local,
}

impl fmt::Display for SurvivalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurvivalMode::Global => "global",
            SurvivalMode::Local => "local",
        })
    }
}

/// The simulated process and its horizon and caps.
#[derive(Debug, Clone)]
pub enum Process {
    /// Discrete-time BRW. With `reproduction = None`, each rate is the mean of
    /// a geometric reproduction law; otherwise the fixed law is used and
    /// the plan must carry exactly one rate (its mean is reported).
    Brw { generations: u32, pop_cap: u64, reproduction: Option<Arc<OffspringDistribution>> },
    /// Contact process; several rates are run on one coupled representation.
    Cp { t_max: f64, caps: CpCaps },
}

impl Process {
    pub fn brw(generations: u32) -> Self {
        Process::Brw { generations, pop_cap: DEFAULT_POP_CAP, reproduction: None }
    }

    pub fn cp(t_max: f64) -> Self {
        Process::Cp { t_max, caps: CpCaps::default() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Process::Brw { .. } => "brw",
            Process::Cp { .. } => "cp",
        }
    }
}

/// A batch of independent trials.
#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub process: Process,
    pub tree_law: Arc<OffspringDistribution>,
    pub tree_mode: TreeMode,
    /// CP infection rates (ascending) or BRW mean offspring values.
    pub rates: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl TrialPlan {
    pub fn new(
        process: Process,
        tree_law: impl Into<Arc<OffspringDistribution>>,
        rates: Vec<f64>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self { process, tree_law: tree_law.into(), tree_mode: TreeMode::Agw, rates, trials, seed }
    }

    /// Same plan at the single rate `rate`.
    pub fn at_rate(&self, rate: f64) -> Self {
        Self { rates: vec![rate], ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::BadPlan(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.rates.is_empty() {
            return bad("at least one rate is required".into());
        }
        if self.rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("rates must be positive and finite".into());
        }
        if self.rates.windows(2).any(|w| w[1] < w[0]) {
            return bad("rates must be ascending".into());
        }
        if self.tree_law.h_min() == 0 {
            return Err(TreeError::ZeroMass.into());
        }
        match &self.process {
            Process::Brw { generations, pop_cap, reproduction } => {
                if *generations == 0 {
                    return bad("generations must be at least 1".into());
                }
                if *pop_cap == 0 {
                    return bad("pop_cap must be at least 1".into());
                }
                if reproduction.is_some() && self.rates.len() != 1 {
                    return bad("a fixed reproduction law takes exactly one rate".into());
                }
            }
            Process::Cp { t_max, caps } => {
                if !(*t_max > 0.0 && t_max.is_finite()) {
                    return bad(format!("t_max must be positive, got {t_max}"));
                }
                if caps.max_infected == 0 {
                    return bad("max_infected must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Human-readable definition of the proxy event for `mode`.
    pub fn proxy(&self, mode: SurvivalMode) -> String {
        match (&self.process, mode) {
            (Process::Brw { generations, pop_cap, .. }, SurvivalMode::Global) => {
                format!("population > 0 at generation {generations}, or population > {pop_cap}")
            }
            (Process::Brw { generations, pop_cap, .. }, SurvivalMode::Local) => format!(
                "root occupied at some generation n >= {} (of {generations}), or population > {pop_cap}",
                local_window_start(*generations)
            ),
            (Process::Cp { t_max, caps }, SurvivalMode::Global) => format!(
                "infected at t_max={t_max}, or infected set > {}, or infection attempt beyond depth {}",
                caps.max_infected, caps.depth_cap
            ),
            (Process::Cp { t_max, caps }, SurvivalMode::Local) => format!(
                "root infected at some time in [{}, {t_max}], or infected set > {}",
                0.75 * t_max,
                caps.max_infected
            ),
        }
    }
}

fn local_window_start(generations: u32) -> u32 {
    (0.75 * generations as f64).ceil() as u32
}

/// Outcome of one trial at one rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub rate: f64,
    pub alive: bool,
    pub capped: bool,
    pub frontier_exit: bool,
    pub root_final_quarter: bool,
    /// CP: root reinfections; BRW: generations with a particle at the root.
    pub root_returns: u32,
    /// CP: end time; BRW: last generation simulated.
    pub extent: f64,
    pub max_population: u64,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str =
        "trial,rate,alive,capped,frontier_exit,root_final_quarter,root_returns,extent,max_population";

    pub fn survived(&self, mode: SurvivalMode) -> bool {
        match mode {
            SurvivalMode::Global => self.alive || self.capped || self.frontier_exit,
            SurvivalMode::Local => self.root_final_quarter || self.capped,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.rate,
            self.alive as u8,
            self.capped as u8,
            self.frontier_exit as u8,
            self.root_final_quarter as u8,
            self.root_returns,
            self.extent,
            self.max_population
        )
    }
}

/// Wilson-interval estimate of a survival probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub rate: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: usize,
    pub successes: usize,
    pub proxy: String,
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    assert!(n > 0 && successes <= n, "need 0 <= successes <= n, n > 0");
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

impl SurvivalEstimate {
    pub fn from_counts(rate: f64, successes: usize, n_trials: usize, proxy: String) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, n_trials);
        Self { rate, p_hat: successes as f64 / n_trials as f64, ci_low, ci_high, n_trials, successes, proxy }
    }
}

fn brw_trial(plan: &TrialPlan, mode: SurvivalMode, i: usize) -> Result<Vec<TrialRecord>, McError> {
    let Process::Brw { generations, pop_cap, reproduction } = &plan.process else { unreachable!() };
    let mut rng = stream(plan.seed, i as u64, Purpose::Dynamics);
    let mut records = Vec::with_capacity(plan.rates.len());
    for &rate in &plan.rates {
        let law = match reproduction {
            Some(law) => law.clone(),
            None => Arc::new(OffspringDistribution::geometric_from_rate(rate)?),
        };
        let reported = if reproduction.is_some() { law.mean() } else { rate };
        let summary = match mode {
            SurvivalMode::Global => run_gw_totals(&law, *generations, *pop_cap, &mut rng),
            SurvivalMode::Local => {
                let tree_seed = derive_seed(plan.seed, i as u64, Purpose::Tree);
                let mut store = TreeStore::new(plan.tree_law.clone(), plan.tree_mode, tree_seed)?;
                run_brw(&mut store, &law, *generations, *pop_cap, &mut rng)?
            }
        };
        let last = summary.totals.len() - 1;
        let from = local_window_start(*generations) as usize;
        records.push(TrialRecord {
            trial: i,
            rate: reported,
            alive: summary.alive_at(*generations as usize),
            capped: summary.capped,
            frontier_exit: false,
            root_final_quarter: summary.root_counts.iter().skip(from).any(|&c| c > 0),
            root_returns: summary.root_returns,
            extent: last as f64,
            max_population: summary.totals.iter().copied().max().unwrap_or(0),
        });
    }
    Ok(records)
}

fn cp_trial(plan: &TrialPlan, i: usize) -> Result<Vec<TrialRecord>, McError> {
    let Process::Cp { t_max, caps } = &plan.process else { unreachable!() };
    let tree_seed = derive_seed(plan.seed, i as u64, Purpose::Tree);
    let mut store = TreeStore::new(plan.tree_law.clone(), plan.tree_mode, tree_seed)?;
    let mut rng = stream(plan.seed, i as u64, Purpose::Dynamics);
    let summaries = run_cp_coupled(&mut store, &plan.rates, *t_max, &mut rng, *caps)?;
    Ok(summaries
        .into_iter()
        .map(|s| TrialRecord {
            trial: i,
            rate: s.lambda,
            alive: !s.died_out && !s.capped,
            capped: s.capped,
            frontier_exit: s.frontier_exit,
            root_final_quarter: s.root_in_final_quarter,
            root_returns: s.root_reinfections,
            extent: s.t_end,
            max_population: s.max_infected as u64,
        })
        .collect())
}

/// Runs every trial of `plan` in parallel and returns the per-trial records,
/// grouped by rate (outer index) in trial order (inner index).
///
/// BRW positions are only simulated in local mode; in global mode the
/// population totals suffice.
pub fn run_trials(plan: &TrialPlan, mode: SurvivalMode) -> Result<Vec<Vec<TrialRecord>>, McError> {
    plan.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..plan.trials)
        .into_par_iter()
        .map(|i| match plan.process {
            Process::Brw { .. } => brw_trial(plan, mode, i),
            Process::Cp { .. } => cp_trial(plan, i),
        })
        .collect::<Result<_, _>>()?;
    let mut by_rate: Vec<Vec<TrialRecord>> = vec![Vec::with_capacity(plan.trials); plan.rates.len()];
    for records in per_trial {
        for (k, r) in records.into_iter().enumerate() {
            by_rate[k].push(r);
        }
    }
    Ok(by_rate)
}

/// Survival estimates from already-computed records, one per rate.
pub fn summarize(plan: &TrialPlan, mode: SurvivalMode, records: &[Vec<TrialRecord>]) -> Vec<SurvivalEstimate> {
    let proxy = plan.proxy(mode);
    records
        .iter()
        .map(|rs| {
            let successes = rs.iter().filter(|r| r.survived(mode)).count();
            let rate = rs.first().map_or(f64::NAN, |r| r.rate);
            SurvivalEstimate::from_counts(rate, successes, rs.len(), proxy.clone())
        })
        .collect()
}

/// Survival-probability estimate for every rate of `plan`.
pub fn estimate_survival(plan: &TrialPlan, mode: SurvivalMode) -> Result<Vec<SurvivalEstimate>, McError> {
    let records = run_trials(plan, mode)?;
    Ok(summarize(plan, mode, &records))
}

/// Result of [`bisect_critical`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalInterval {
    pub lo: f64,
    pub hi: f64,
    pub threshold: f64,
    pub mode: SurvivalMode,
    /// Every probe in evaluation order, bracket endpoints first.
    pub probes: Vec<SurvivalEstimate>,
}

/// A probe counts as surviving when its interval excludes `[0, THRESHOLD]`.
fn is_high(e: &SurvivalEstimate) -> bool {
    e.ci_low > THRESHOLD
}

/// Bisects the rate over `bracket` until the interval is at most `tol` wide.
/// The lower end always has `ci_low <= THRESHOLD`, the upper end
/// `ci_low > THRESHOLD`. Every probe reuses the template's master seed.
pub fn bisect_critical(
    template: &TrialPlan,
    mode: SurvivalMode,
    bracket: (f64, f64),
    tol: f64,
    trials_per_probe: usize,
) -> Result<CriticalInterval, McError> {
    let (mut lo, mut hi) = bracket;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(McError::BadPlan(format!("tol must be positive, got {tol}")));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(McError::BadPlan(format!("bad bracket [{lo}, {hi}]")));
    }
    let probe = |rate: f64| -> Result<SurvivalEstimate, McError> {
        let plan = TrialPlan { trials: trials_per_probe, ..template.at_rate(rate) };
        Ok(estimate_survival(&plan, mode)?.remove(0))
    };
    let not_separating = |lo: f64, hi: f64, a: f64, b: f64| McError::BracketNotSeparating {
        lo,
        hi,
        lo_ci_low: a,
        hi_ci_low: b,
        threshold: THRESHOLD,
    };
    if hi <= lo {
        let e = probe(lo)?;
        return Err(not_separating(lo, hi, e.ci_low, e.ci_low));
    }
    let e_lo = probe(lo)?;
    let e_hi = probe(hi)?;
    if is_high(&e_lo) || !is_high(&e_hi) {
        return Err(not_separating(lo, hi, e_lo.ci_low, e_hi.ci_low));
    }
    let mut probes = vec![e_lo, e_hi];
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let e = probe(mid)?;
        if is_high(&e) {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(e);
    }
    Ok(CriticalInterval { lo, hi, threshold: THRESHOLD, mode, probes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg4() -> OffspringDistribution {
        OffspringDistribution::degenerate(4).unwrap()
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
        let (lo, hi) = wilson_interval(1000, 1000);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.995);
        let (lo, hi) = wilson_interval(30, 100);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
    }

    #[test]
    fn validation() {
        let plan = TrialPlan::new(Process::cp(5.0), deg4(), vec![2.0, 1.0], 10, 0);
        assert!(matches!(plan.validate(), Err(McError::BadPlan(_))));
        let plan = TrialPlan::new(Process::cp(5.0), deg4(), vec![1.0], 0, 0);
        assert!(matches!(plan.validate(), Err(McError::BadPlan(_))));
        let plan = TrialPlan::new(Process::brw(0), deg4(), vec![1.0], 1, 0);
        assert!(matches!(plan.validate(), Err(McError::BadPlan(_))));
    }

    #[test]
    fn pure_death_limit() {
        let plan = TrialPlan::new(Process::cp(10.0), deg4(), vec![1e-6], 1000, 1);
        let e = estimate_survival(&plan, SurvivalMode::Global).unwrap().remove(0);
        assert!(e.ci_high < 0.01);
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
    }

    #[test]
    fn coupled_estimates_are_pathwise_monotone() {
        let mut process = Process::cp(8.0);
        if let Process::Cp { caps, .. } = &mut process {
            caps.max_infected = 500;
        }
        let plan = TrialPlan::new(process, deg4(), vec![1.0, 1.5, 2.0, 3.0], 200, 3);
        for mode in [SurvivalMode::Global, SurvivalMode::Local] {
            let records = run_trials(&plan, mode).unwrap();
            for pair in records.windows(2) {
                for (lo, hi) in pair[0].iter().zip(&pair[1]) {
                    assert!(!lo.survived(mode) || hi.survived(mode));
                }
            }
            let est = summarize(&plan, mode, &records);
            assert!(est.windows(2).all(|w| w[0].p_hat <= w[1].p_hat));
        }
    }

    #[test]
    fn brw_matches_gw_survival() {
        let plan = TrialPlan::new(Process::brw(100), deg4(), vec![1.5], 4000, 2);
        let e = estimate_survival(&plan, SurvivalMode::Global).unwrap().remove(0);
        assert!(e.ci_low - 0.01 < 1.0 / 3.0 && 1.0 / 3.0 < e.ci_high + 0.01, "{e:?}");
    }

    #[test]
    fn degenerate_bracket_errors() {
        let plan = TrialPlan::new(Process::cp(5.0), deg4(), vec![1.0], 10, 0);
        let err = bisect_critical(&plan, SurvivalMode::Global, (1.2, 1.2), 0.1, 50).unwrap_err();
        assert!(matches!(err, McError::BracketNotSeparating { .. }));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let plan = TrialPlan::new(Process::cp(5.0), deg4(), vec![1.2, 2.0], 64, 9);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_trials(&plan, SurvivalMode::Global).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
