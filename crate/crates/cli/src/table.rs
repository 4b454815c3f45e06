//! The certified-constants table for degenerate tree laws.

use gwcp_core::bounds::{bound_report, SearchOptions};
use gwcp_core::OffspringDistribution;
use serde::Serialize;

use crate::CliError;

pub const TABLE_H_MIN: std::ops::RangeInclusive<u32> = 4..=12;

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub h_min: u32,
    pub lambda_brw_lower: f64,
    pub lambda_g_upper_simple: f64,
    pub lambda_g_upper_refined: Option<f64>,
    pub lambda_l_lower_cert: Option<f64>,
    pub verdict: &'static str,
    pub separated_by: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PaperTable {
    pub rows: Vec<TableRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check(checks: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    checks.push(Check { name: name.to_string(), passed, detail });
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| lo < v && v < hi)
}

/// Builds the table for `h_min` in 4..=12 and runs the anchored self-checks.
pub fn cmd_paper_table(grid: usize) -> Result<PaperTable, CliError> {
    let opts = SearchOptions { grid, ..SearchOptions::default() };
    let mut rows = Vec::new();
    for h in TABLE_H_MIN {
        let r = bound_report(&OffspringDistribution::degenerate(h)?, &opts)?;
        rows.push(TableRow {
            h_min: h,
            lambda_brw_lower: r.lambda_brw_lower,
            lambda_g_upper_simple: r.lambda_g_upper_simple.expect("h_min >= 2"),
            lambda_g_upper_refined: r.lambda_g_upper_refined,
            lambda_l_lower_cert: r.lambda_l_lower_cert,
            verdict: r.verdict,
            separated_by: r.separated_by,
        });
    }

    let mut checks = Vec::new();
    let row = |h: u32| &rows[(h - 4) as usize];
    let (r4, r5, r6) = (row(4), row(5), row(6));
    check(
        &mut checks,
        "h4_brw_lower",
        (r4.lambda_brw_lower - 1.25).abs() <= 1e-12,
        format!("{} vs 1.25", r4.lambda_brw_lower),
    );
    check(
        &mut checks,
        "h4_g_upper_simple",
        (r4.lambda_g_upper_simple - 5.0 / 3.0).abs() <= 1e-12,
        format!("{} vs 5/3", r4.lambda_g_upper_simple),
    );
    check(
        &mut checks,
        "h4_g_upper_refined",
        within(r4.lambda_g_upper_refined, 1.45, 1.46),
        format!("{:?} in (1.45, 1.46)", r4.lambda_g_upper_refined),
    );
    check(
        &mut checks,
        "h4_l_lower_cert",
        r4.lambda_l_lower_cert.is_some_and(|v| v >= 1.50),
        format!("{:?} >= 1.50", r4.lambda_l_lower_cert),
    );
    check(
        &mut checks,
        "h5_brw_lower",
        (r5.lambda_brw_lower - 6.0 / (2.0 * 5f64.sqrt())).abs() <= 1e-12,
        format!("{} vs 6/(2 sqrt 5)", r5.lambda_brw_lower),
    );
    check(
        &mut checks,
        "h5_g_upper_simple",
        (r5.lambda_g_upper_simple - 1.5).abs() <= 1e-12,
        format!("{} vs 1.5", r5.lambda_g_upper_simple),
    );
    check(
        &mut checks,
        "h5_g_upper_refined",
        within(r5.lambda_g_upper_refined, 1.34, 1.35),
        format!("{:?} in (1.34, 1.35)", r5.lambda_g_upper_refined),
    );
    check(
        &mut checks,
        "h5_l_lower_cert",
        r5.lambda_l_lower_cert.is_some_and(|v| v >= 1.59),
        format!("{:?} >= 1.59", r5.lambda_l_lower_cert),
    );
    check(
        &mut checks,
        "h6_simple_bounds_separate",
        r6.lambda_g_upper_simple < r6.lambda_brw_lower && r6.separated_by == Some("simple"),
        format!("{} < {}", r6.lambda_g_upper_simple, r6.lambda_brw_lower),
    );
    for r in &rows {
        check(&mut checks, &format!("h{}_weak", r.h_min), r.verdict == "WEAK", r.verdict.to_string());
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(PaperTable { rows, checks, passed })
}
