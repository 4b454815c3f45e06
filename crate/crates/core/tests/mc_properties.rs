use gwcp_core::mc::{bisect_critical, estimate_survival, run_trials, wilson_interval, McError, Process};
use gwcp_core::rng::{stream, Purpose};
use gwcp_core::{CpCaps, OffspringDistribution, SurvivalMode, TrialPlan};
use rand::Rng;

fn deg4() -> OffspringDistribution {
    OffspringDistribution::degenerate(4).unwrap()
}

#[test]
fn wilson_coverage_for_bernoulli() {
    let reps = 1000u64;
    let n = 200;
    let covered = (0..reps)
        .filter(|&rep| {
            let mut rng = stream(0, rep, Purpose::Synthetic);
            let s = (0..n).filter(|_| rng.random::<f64>() < 0.3).count();
            let (lo, hi) = wilson_interval(s, n);
            lo <= 0.3 && 0.3 <= hi
        })
        .count();
    assert!(covered as f64 >= 0.93 * reps as f64, "{covered}/{reps}");
}

#[test]
fn global_proxy_trends_to_gw_survival() {
    let target = 1.0 - OffspringDistribution::geometric_from_rate(1.5).unwrap().extinction_probability();
    let mut estimates = Vec::new();
    for horizon in [25, 50, 100] {
        let process = Process::Brw { generations: horizon, pop_cap: 1_000_000_000, reproduction: None };
        let plan = TrialPlan::new(process, deg4(), vec![1.5], 20_000, 4);
        estimates.push(estimate_survival(&plan, SurvivalMode::Global).unwrap().remove(0));
    }
    // common random numbers make the proxy pathwise non-increasing in the horizon
    assert!(estimates.windows(2).all(|w| w[1].p_hat <= w[0].p_hat));
    let last = estimates.last().unwrap();
    assert!(last.ci_low <= target && target <= last.ci_high, "{last:?} vs {target}");
    assert!((estimates[0].p_hat - target).abs() >= (last.p_hat - target).abs());
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let plan = TrialPlan::new(Process::cp(6.0), deg4(), vec![1.0, 1.5, 2.0], 300, 12);
    let csv = |threads: usize| {
        let records = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&plan, SurvivalMode::Global).unwrap());
        records.iter().flatten().map(|r| r.csv_row() + "\n").collect::<String>()
    };
    assert_eq!(csv(1), csv(4));
}

#[test]
fn non_separating_bracket() {
    let plan = TrialPlan::new(Process::cp(10.0), deg4(), vec![1.0], 200, 0);
    let err = bisect_critical(&plan, SurvivalMode::Global, (0.2, 0.3), 0.05, 200).unwrap_err();
    assert!(matches!(err, McError::BracketNotSeparating { .. }), "{err}");
}

#[test]
fn cp_global_bisection_is_consistent_with_upper_bound() {
    let process = Process::Cp { t_max: 20.0, caps: CpCaps { max_infected: 2000, ..CpCaps::default() } };
    let plan = TrialPlan::new(process, deg4(), vec![1.0], 1, 5);
    let out = bisect_critical(&plan, SurvivalMode::Global, (0.8, 2.5), 0.1, 400).unwrap();
    eprintln!("cp global interval [{}, {}]", out.lo, out.hi);
    assert!(out.hi - out.lo <= 0.1);
    assert!(out.hi <= 1.7);
    assert_eq!(out.probes.len(), 2 + 5);
}

#[test]
fn brw_local_bisection_brackets_the_strong_survival_threshold() {
    let process = Process::Brw { generations: 40, pop_cap: 100_000, reproduction: None };
    let plan = TrialPlan::new(process, deg4(), vec![1.0], 1, 6);
    let out = bisect_critical(&plan, SurvivalMode::Local, (1.1, 1.5), 0.05, 400).unwrap();
    eprintln!("brw local interval [{}, {}]", out.lo, out.hi);
    assert!(out.lo - 0.1 <= 1.25 && 1.25 <= out.hi + 0.1);
}
