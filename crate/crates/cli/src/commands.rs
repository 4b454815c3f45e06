use std::fs;
use std::sync::Arc;

use gwcp_core::bounds::{
    bound_report, check_certificate, check_certificate_full, search_certificate, BoundReport, SearchOptions,
};
use gwcp_core::mc::{bisect_critical, run_trials, summarize, Process, SurvivalEstimate, TrialRecord};
use gwcp_core::walk::{return_probability_series, spectral_radius_dp_estimate, spectral_radius_formula};
use gwcp_core::{Certificate, CpCaps, DistanceChain, OffspringDistribution, SurvivalMode, TrialPlan};
use serde::Serialize;
use serde_json::json;

use crate::config::{
    BoundsArgs, BrwArgs, CertifyArgs, Command, CpArgs, EstimateArgs, ProcessArg, RunConfig, SearchArgs, Simulate,
    SpectralArgs,
};
use crate::output::{csv_body, meta, Report};
use crate::table::cmd_paper_table;
use crate::CliError;

pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    match &cfg.command {
        Command::Bounds(a) => bounds(cfg, a),
        Command::Certify(a) => certify(a),
        Command::SearchCertificate(a) => search(a),
        Command::SpectralRadius(a) => spectral(a),
        Command::Simulate(Simulate::Brw(a)) => simulate_brw(cfg, a),
        Command::Simulate(Simulate::Cp(a)) => simulate_cp(cfg, a),
        Command::EstimateCritical(a) => estimate_critical(cfg, a),
        Command::PaperTable(a) => {
            let table = cmd_paper_table(a.grid)?;
            let mut report = Report::new(&table, &table.rows)?;
            if !table.passed {
                let failed: Vec<&str> = table.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                report.failed_check = Some(failed.join(", "));
            }
            Ok(report)
        }
    }
}

fn tree_law(cfg: &RunConfig) -> Result<OffspringDistribution, CliError> {
    let spec = cfg.dist.as_ref().ok_or_else(|| CliError::Usage("--dist is required".into()))?;
    Ok(spec.tree_law()?)
}

#[derive(Serialize)]
struct BoundsRow {
    h_min: u32,
    lambda_brw_lower: f64,
    lambda_g_upper_simple: Option<f64>,
    lambda_g_upper_refined: Option<f64>,
    lambda_l_lower_cert: Option<f64>,
    lambda_g_upper: Option<f64>,
    lambda_l_lower: f64,
    weak_survival: bool,
    verdict: &'static str,
}

impl From<&BoundReport> for BoundsRow {
    fn from(r: &BoundReport) -> Self {
        Self {
            h_min: r.h_min,
            lambda_brw_lower: r.lambda_brw_lower,
            lambda_g_upper_simple: r.lambda_g_upper_simple,
            lambda_g_upper_refined: r.lambda_g_upper_refined,
            lambda_l_lower_cert: r.lambda_l_lower_cert,
            lambda_g_upper: r.lambda_g_upper,
            lambda_l_lower: r.lambda_l_lower,
            weak_survival: r.weak_survival,
            verdict: r.verdict,
        }
    }
}

fn bounds(cfg: &RunConfig, a: &BoundsArgs) -> Result<Report, CliError> {
    let law = tree_law(cfg)?;
    let opts = SearchOptions { grid: a.grid, eps: a.eps, ..SearchOptions::default() };
    let report = bound_report(&law, &opts)?;
    Report::new(&report, &[BoundsRow::from(&report)])
}

#[derive(Serialize)]
struct CertRow {
    h_min: u32,
    found: bool,
    nu: Option<f64>,
    r: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    eps: Option<f64>,
    lambda: Option<f64>,
    feasible: Option<bool>,
    lhs1: Option<f64>,
    lhs2: Option<f64>,
    full_passed: Option<bool>,
    full_min_slack: Option<f64>,
}

fn cert_row(h_min: u32, cert: Option<&Certificate>, n_v_max: u64) -> Result<CertRow, CliError> {
    let mut row = CertRow {
        h_min,
        found: cert.is_some(),
        nu: None,
        r: None,
        b: None,
        c: None,
        eps: None,
        lambda: None,
        feasible: None,
        lhs1: None,
        lhs2: None,
        full_passed: None,
        full_min_slack: None,
    };
    if let Some(c) = cert {
        let check = check_certificate(c)?;
        let full = check_certificate_full(c, n_v_max)?;
        row.nu = Some(c.nu);
        row.r = Some(c.r);
        row.b = Some(c.b);
        row.c = Some(c.c);
        row.eps = Some(c.eps);
        row.lambda = Some(c.lambda());
        row.feasible = Some(check.feasible);
        row.lhs1 = Some(check.lhs1);
        row.lhs2 = Some(check.lhs2);
        row.full_passed = Some(full.passed);
        row.full_min_slack = Some(full.min_slack);
    }
    Ok(row)
}

fn certify(a: &CertifyArgs) -> Result<Report, CliError> {
    let cert = Certificate { h_min: a.h_min, nu: a.nu, r: a.r, b: a.b, c: a.c.unwrap_or(a.b * a.r), eps: a.eps };
    let reduced = check_certificate(&cert)?;
    let full = check_certificate_full(&cert, a.n_v_max)?;
    let result = json!({
        "certificate": cert,
        "lambda": cert.lambda(),
        "reduced": reduced,
        "full": { "n_v_max": a.n_v_max, "check": full },
        "passed": reduced.feasible && full.passed,
    });
    Report::new(&result, &[cert_row(a.h_min, Some(&cert), a.n_v_max)?])
}

fn search(a: &SearchArgs) -> Result<Report, CliError> {
    let opts = SearchOptions { grid: a.grid, eps: a.eps, c_scale: a.c_scale };
    let cert = search_certificate(a.h_min, &opts)?;
    let check = cert.as_ref().map(check_certificate).transpose()?;
    let result = json!({
        "h_min": a.h_min,
        "options": opts,
        "certificate": cert,
        "lambda": cert.map(|c| c.lambda()),
        "check": check,
    });
    Report::new(&result, &[cert_row(a.h_min, cert.as_ref(), 10_000)?])
}

#[derive(Serialize)]
struct ReturnRow {
    n: usize,
    return_probability: f64,
    root: Option<f64>,
}

fn spectral(a: &SpectralArgs) -> Result<Report, CliError> {
    let formula = spectral_radius_formula(a.h_min)?;
    let chain = DistanceChain::new(a.h_min)?;
    let estimate = spectral_radius_dp_estimate(chain, a.n_max)?;
    let series = return_probability_series(chain, a.n_max)?;
    let rows: Vec<ReturnRow> = series
        .iter()
        .enumerate()
        .map(|(n, &p)| ReturnRow {
            n,
            return_probability: p,
            root: (n > 0 && n % 2 == 0 && p > 0.0).then(|| p.powf(1.0 / n as f64)),
        })
        .collect();
    let result = json!({
        "h_min": a.h_min,
        "tree": format!("{}-regular", a.h_min + 1),
        "formula": formula,
        "dp_estimate": estimate,
        "n_max": a.n_max,
        "relative_gap": (formula - estimate) / formula,
        "odd_steps_zero": series.iter().skip(1).step_by(2).all(|&p| p == 0.0),
        "return_probabilities": series.iter().take(21).collect::<Vec<_>>(),
    });
    Ok(Report { result, csv: csv_body(&rows)?, failed_check: None })
}

#[derive(Serialize)]
struct Level {
    rate: f64,
    global: SurvivalEstimate,
    local: SurvivalEstimate,
    mean_root_returns: f64,
    capped: usize,
    frontier_exits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gw_survival: Option<f64>,
}

fn levels(plan: &TrialPlan, records: &[Vec<TrialRecord>], oracle: impl Fn(f64) -> Option<f64>) -> Vec<Level> {
    let global = summarize(plan, SurvivalMode::Global, records);
    let local = summarize(plan, SurvivalMode::Local, records);
    global
        .into_iter()
        .zip(local)
        .zip(records)
        .map(|((g, l), rs)| Level {
            rate: g.rate,
            mean_root_returns: rs.iter().map(|r| r.root_returns as f64).sum::<f64>() / rs.len() as f64,
            capped: rs.iter().filter(|r| r.capped).count(),
            frontier_exits: rs.iter().filter(|r| r.frontier_exit).count(),
            gw_survival: oracle(g.rate),
            global: g,
            local: l,
        })
        .collect()
}

fn simulate_brw(cfg: &RunConfig, a: &BrwArgs) -> Result<Report, CliError> {
    let tree = tree_law(cfg)?;
    let (reproduction, rates) = match &cfg.reproduction {
        Some(spec) => {
            let law = spec.reproduction_law()?;
            let mean = law.mean();
            (Some(Arc::new(law)), vec![mean])
        }
        None => (None, a.mu.clone()),
    };
    let fixed = reproduction.clone();
    let process = Process::Brw { generations: a.generations, pop_cap: a.pop_cap, reproduction };
    let mut plan = TrialPlan::new(process, tree, rates, a.trials, cfg.seed);
    plan.tree_mode = a.tree.into();
    // local mode simulates positions, which also yields the totals
    let records = run_trials(&plan, SurvivalMode::Local)?;
    let oracle = |mu: f64| -> Option<f64> {
        let law = match &fixed {
            Some(l) => (**l).clone(),
            None => OffspringDistribution::geometric_from_rate(mu).ok()?,
        };
        Some(1.0 - law.extinction_probability())
    };
    let result = json!({
        "process": "brw",
        "proxy": { "global": plan.proxy(SurvivalMode::Global), "local": plan.proxy(SurvivalMode::Local) },
        "levels": levels(&plan, &records, oracle),
    });
    let flat: Vec<&TrialRecord> = records.iter().flatten().collect();
    Ok(Report { result, csv: csv_body(&flat)?, failed_check: None })
}

fn simulate_cp(cfg: &RunConfig, a: &CpArgs) -> Result<Report, CliError> {
    let tree = tree_law(cfg)?;
    let caps = CpCaps { max_infected: a.max_infected, depth_cap: a.depth_cap };
    let mut plan = TrialPlan::new(Process::Cp { t_max: a.t_max, caps }, tree, a.lambda.clone(), a.trials, cfg.seed);
    plan.tree_mode = a.tree.into();
    let records = run_trials(&plan, SurvivalMode::Global)?;
    let result = json!({
        "process": "cp",
        "proxy": { "global": plan.proxy(SurvivalMode::Global), "local": plan.proxy(SurvivalMode::Local) },
        "levels": levels(&plan, &records, |_| None),
    });
    let flat: Vec<&TrialRecord> = records.iter().flatten().collect();
    Ok(Report { result, csv: csv_body(&flat)?, failed_check: None })
}

#[derive(Serialize)]
struct ProbeRow {
    lambda: f64,
    p_hat: f64,
    ci_low: f64,
    ci_high: f64,
    successes: usize,
    n_trials: usize,
}

fn estimate_critical(cfg: &RunConfig, a: &EstimateArgs) -> Result<Report, CliError> {
    let tree = tree_law(cfg)?;
    let process = match a.process {
        ProcessArg::Cp => {
            Process::Cp { t_max: a.t_max, caps: CpCaps { max_infected: a.max_infected, depth_cap: a.depth_cap } }
        }
        ProcessArg::Brw => Process::Brw { generations: a.generations, pop_cap: a.pop_cap, reproduction: None },
    };
    let mode: SurvivalMode = a.mode.into();
    let mut template = TrialPlan::new(process, tree, vec![a.bracket[0]], a.trials, cfg.seed);
    template.tree_mode = a.tree.into();
    let out = bisect_critical(&template, mode, (a.bracket[0], a.bracket[1]), a.tol, a.trials)?;
    let probes: Vec<ProbeRow> = out
        .probes
        .iter()
        .map(|e| ProbeRow {
            lambda: e.rate,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            successes: e.successes,
            n_trials: e.n_trials,
        })
        .collect();
    let result = json!({
        "process": template.process.name(),
        "mode": mode,
        "proxy": template.proxy(mode),
        "threshold": out.threshold,
        "interval": [out.lo, out.hi],
        "probes": probes.iter().map(|p| json!({
            "lambda": p.lambda,
            "p_hat": p.p_hat,
            "ci": [p.ci_low, p.ci_high],
            "successes": p.successes,
            "n_trials": p.n_trials,
        })).collect::<Vec<_>>(),
    });
    if let Some(path) = &a.trials_csv {
        let mut rows = Vec::new();
        for rate in [out.lo, out.hi] {
            rows.extend(run_trials(&template.at_rate(rate), mode)?.remove(0));
        }
        let text = format!("# meta {}\n{}", meta(cfg), csv_body(&rows)?);
        fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    Ok(Report { result, csv: csv_body(&probes)?, failed_check: None })
}
