//! Certified bounds on the contact-process critical values.
//!
//! * `lambda_g` (global survival) is bounded above by embedding a supercritical
//!   block branching process in the CP: any `lambda` with `E_X f(X, lambda) > 1`
//!   is an upper bound ([`f_hmin`], [`lambda_g_upper_refined`]), and the
//!   cruder [`lambda_g_upper_simple`] follows from the same expectation.
//! * `lambda_l` (local survival) is bounded below by BRW domination
//!   ([`lambda_l_lower_brw`]) and by supermartingale weight certificates
//!   ([`Certificate`], [`search_certificate`]).
//!
//! [`bound_report`] assembles all of them for one tree law.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::OffspringDistribution;

/// Bisection bracket for [`lambda_g_upper_refined`].
pub const REFINED_BRACKET: (f64, f64) = (0.01, 100.0);
/// Bisection tolerance for [`lambda_g_upper_refined`].
pub const REFINED_TOL: f64 = 1e-4;
/// Default slack used by certificates.
pub const DEFAULT_EPS: f64 = 1e-4;
/// Default coarse grid resolution of [`search_certificate`].
pub const DEFAULT_GRID: usize = 200;
/// Refinement rounds after the coarse grid, each 10x finer.
pub const REFINE_ROUNDS: usize = 3;
/// Half-width of each refinement window, in cells of the previous grid.
const REFINE_HALF_WIDTH: f64 = 5.0;
/// Relative shrink applied to the maximal `nu` so that both inequalities hold strictly.
const NU_SHRINK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("E_X f(X, lambda) <= 1 on the whole bracket [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("bad certificate: {0}")]
    BadCertificate(String),
}

fn check_h_min(h_min: u32, at_least: u32) -> Result<(), BoundsError> {
    if h_min < at_least {
        return Err(BoundsError::BadInput(format!("h_min must be at least {at_least}, got {h_min}")));
    }
    Ok(())
}

/// `f_h(x, lambda) = lambda x / (lambda + x + 1) * (1 - lambda / (lambda + x + 1) / (2 + lambda / (h + 1)))^-1`,
/// the per-level growth factor of the block branching process.
pub fn f_hmin(x: f64, lambda: f64, h_min: u32) -> Result<f64, BoundsError> {
    if !(x > 0.0 && x.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BoundsError::BadInput(format!("need x > 0 and lambda > 0, got x={x}, lambda={lambda}")));
    }
    check_h_min(h_min, 1)?;
    Ok(f_unchecked(x, lambda, h_min))
}

#[inline]
fn f_unchecked(x: f64, lambda: f64, h_min: u32) -> f64 {
    let a = lambda + x + 1.0;
    let inner = 1.0 - lambda / a * (1.0 / (2.0 + lambda / (h_min as f64 + 1.0)));
    lambda * x / a / inner
}

/// `E_X f_h(X, lambda)` for `X` distributed as the tree law.
pub fn expected_f(law: &OffspringDistribution, lambda: f64) -> f64 {
    let h = law.h_min();
    law.expect(|k| f_unchecked(k as f64, lambda, h))
}

/// Smallest `lambda` (to within [`REFINED_TOL`], from above) with
/// `E_X f_h(X, lambda) > 1`, by bisection on [`REFINED_BRACKET`].
pub fn lambda_g_upper_refined(law: &OffspringDistribution) -> Result<f64, BoundsError> {
    check_h_min(law.h_min(), 1)?;
    let (mut lo, mut hi) = REFINED_BRACKET;
    if expected_f(law, hi) <= 1.0 {
        return Err(BoundsError::NoRoot { lo, hi });
    }
    if expected_f(law, lo) > 1.0 {
        return Ok(lo);
    }
    while hi - lo > REFINED_TOL {
        let mid = 0.5 * (lo + hi);
        if expected_f(law, mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `(h_min + 1) / (h_min - 1)`, valid for `h_min >= 2`.
pub fn lambda_g_upper_simple(h_min: u32) -> Result<f64, BoundsError> {
    check_h_min(h_min, 2)?;
    let h = h_min as f64;
    Ok((h + 1.0) / (h - 1.0))
}

/// `(h_min + 1) / (2 sqrt(h_min))`: the BRW that dominates the CP survives
/// locally only above this rate.
pub fn lambda_l_lower_brw(h_min: u32) -> Result<f64, BoundsError> {
    check_h_min(h_min, 1)?;
    let h = h_min as f64;
    Ok((h + 1.0) / (2.0 * h.sqrt()))
}

/// Lower bound on the expected number of infected vertices at the bottom of
/// an `(n+1)`-level block: `I^n * II`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockExpectation {
    /// `E_X f_h(X, lambda)`.
    pub per_level: f64,
    /// `E_X lambda X / (lambda + X + 1)`.
    pub last_level: f64,
    pub n: u32,
    pub value: f64,
}

pub fn block_expectation(law: &OffspringDistribution, lambda: f64, n: u32) -> Result<BlockExpectation, BoundsError> {
    if n == 0 {
        return Err(BoundsError::BadInput("block depth n must be at least 1".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BoundsError::BadInput(format!("lambda must be positive, got {lambda}")));
    }
    let per_level = expected_f(law, lambda);
    let last_level = law.expect(|k| lambda * k as f64 / (lambda + k as f64 + 1.0));
    Ok(BlockExpectation { per_level, last_level, n, value: per_level.powi(n as i32) * last_level })
}

/// Smallest block depth `n >= 1` with `I^n * II > 1`, or `None` if `I <= 1`.
pub fn min_block_depth(law: &OffspringDistribution, lambda: f64) -> Result<Option<u32>, BoundsError> {
    let b = block_expectation(law, lambda, 1)?;
    if b.per_level <= 1.0 {
        return Ok(None);
    }
    if b.value > 1.0 {
        return Ok(Some(1));
    }
    let ratio = -b.last_level.ln() / b.per_level.ln();
    let mut n = (ratio.floor() as u32).max(1);
    // guard the boundary against rounding in the logarithms
    while block_expectation(law, lambda, n)?.value <= 1.0 {
        n += 1;
    }
    while n > 1 && block_expectation(law, lambda, n - 1)?.value > 1.0 {
        n -= 1;
    }
    Ok(Some(n))
}

/// Weight-function parameters `(nu, r, b, c, eps)` for minimal offspring
/// `h_min`; certifies `lambda_l >= nu (h_min + 1)` when feasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Certificate {
    pub h_min: u32,
    pub nu: f64,
    pub r: f64,
    pub b: f64,
    pub c: f64,
    pub eps: f64,
}

impl Certificate {
    /// Certificate with `c = b r`.
    pub fn with_default_c(h_min: u32, nu: f64, r: f64, b: f64, eps: f64) -> Self {
        Self { h_min, nu, r, b, c: b * r, eps }
    }

    /// The rate it certifies, `nu (h_min + 1)`.
    pub fn lambda(&self) -> f64 {
        self.nu * (self.h_min as f64 + 1.0)
    }

    /// Checks `0 < r < 1`, `0 < b < 1`, `b r <= c`, `eps > 0`, `nu > 0`, `h_min >= 1`.
    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |m: &str| Err(BoundsError::BadCertificate(m.to_string()));
        if self.h_min < 1 {
            return bad("h_min must be at least 1");
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return bad("r must lie in (0, 1)");
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return bad("b must lie in (0, 1)");
        }
        if !(self.b * self.r <= self.c) || !self.c.is_finite() {
            return bad("c must be at least b*r");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must lie in (0, 1)");
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu must be positive");
        }
        // the first inequality is binding at n_v = h_min only under this ordering
        if !(1.0 / self.r - self.b > self.r * (1.0 - self.b)) {
            return bad("1/r - b must exceed r(1-b)");
        }
        Ok(())
    }
}

/// Left-hand sides and slacks of the two reduced inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub feasible: bool,
    pub lhs1: f64,
    pub lhs2: f64,
    /// `(1 - eps) - lhs1`.
    pub slack1: f64,
    /// `(1 - eps) - lhs2`.
    pub slack2: f64,
    pub lambda: f64,
}

/// Evaluates
/// `nu (1/r - b + h r (1 - b)) < 1 - eps` and
/// `b + c/r + (h + 1) nu r (1 - b) < 1 - eps`.
pub fn check_certificate(cert: &Certificate) -> Result<CertificateCheck, BoundsError> {
    cert.validate()?;
    let Certificate { h_min, nu, r, b, c, eps } = *cert;
    let h = h_min as f64;
    let lhs1 = nu * (1.0 / r - b + h * r * (1.0 - b));
    let lhs2 = b + c / r + (h + 1.0) * nu * r * (1.0 - b);
    let target = 1.0 - eps;
    Ok(CertificateCheck {
        feasible: lhs1 < target && lhs2 < target,
        lhs1,
        lhs2,
        slack1: target - lhs1,
        slack2: target - lhs2,
        lambda: cert.lambda(),
    })
}

/// Outcome of checking the unreduced four-inequality system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullCheck {
    pub passed: bool,
    /// First `(n_v, inequality index 1..=4, lhs)` that failed.
    pub first_failure: Option<(u64, u8, f64)>,
    /// Smallest slack seen over all inequalities and `n_v`.
    pub min_slack: f64,
}

/// Checks, for every `n_v` in `h_min..=n_v_max`, the four extreme-case
/// drift inequalities with `lambda = nu (h_min + 1)`:
///
/// 1. `lambda/(n+1) (1/r - b) + lambda n/(n+1) r (1-b) < 1 - eps`
/// 2. `(b r - c) n + lambda/(n+1) (1/r - b) < 1 - eps`
/// 3. `b + lambda n/(n+1) r (1-b) + c/r < 1 - eps`
/// 4. `b + (b r - c) n + c/r < 1 - eps`
pub fn check_certificate_full(cert: &Certificate, n_v_max: u64) -> Result<FullCheck, BoundsError> {
    cert.validate()?;
    if n_v_max < cert.h_min as u64 {
        return Err(BoundsError::BadInput(format!("n_v_max {n_v_max} below h_min {}", cert.h_min)));
    }
    let Certificate { r, b, c, eps, .. } = *cert;
    let lambda = cert.lambda();
    let target = 1.0 - eps;
    let mut min_slack = f64::INFINITY;
    let mut first_failure = None;
    for n in cert.h_min as u64..=n_v_max {
        let nf = n as f64;
        let to_parent = lambda / (nf + 1.0) * (1.0 / r - b);
        let to_children = lambda * nf / (nf + 1.0) * r * (1.0 - b);
        let lhs = [
            to_parent + to_children,
            (b * r - c) * nf + to_parent,
            b + to_children + c / r,
            b + (b * r - c) * nf + c / r,
        ];
        for (i, &value) in lhs.iter().enumerate() {
            let slack = target - value;
            min_slack = min_slack.min(slack);
            if !(value < target) && first_failure.is_none() {
                first_failure = Some((n, i as u8 + 1, value));
            }
        }
    }
    Ok(FullCheck { passed: first_failure.is_none(), first_failure, min_slack })
}

/// Options for [`search_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Coarse grid resolution per axis over `(0, 1)`.
    pub grid: usize,
    pub eps: f64,
    /// `c = c_scale * b * r`; must be at least 1.
    pub c_scale: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID, eps: DEFAULT_EPS, c_scale: 1.0 }
    }
}

/// Largest `nu` satisfying both reduced inequalities at `(r, b)`; `None` if
/// the second inequality cannot hold for any `nu > 0`.
fn max_nu(h_min: u32, r: f64, b: f64, opts: &SearchOptions) -> Option<f64> {
    let h = h_min as f64;
    let target = 1.0 - opts.eps;
    let c = opts.c_scale * b * r;
    let room = target - b - c / r;
    if room <= 0.0 {
        return None;
    }
    let nu1 = target / (1.0 / r - b + h * r * (1.0 - b));
    let nu2 = room / ((h + 1.0) * r * (1.0 - b));
    Some(nu1.min(nu2))
}

fn best_on_grid(h_min: u32, opts: &SearchOptions, r_axis: &[f64], b_axis: &[f64]) -> Option<(f64, f64, f64)> {
    r_axis
        .par_iter()
        .enumerate()
        .filter_map(|(i, &r)| {
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for &b in b_axis {
                if let Some(nu) = max_nu(h_min, r, b, opts) {
                    if best.is_none_or(|(bn, ..)| nu > bn) {
                        best = Some((nu, i, r, b));
                    }
                }
            }
            best
        })
        // ties go to the smaller r index, independent of scheduling
        .reduce_with(|x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x })
        .map(|(nu, _, r, b)| (nu, r, b))
}

fn axis(center: f64, half_width: f64, step: f64) -> Vec<f64> {
    let m = (2.0 * half_width / step).round() as i64;
    (0..=m).map(|i| center - half_width + i as f64 * step).filter(|&x| x > 0.0 && x < 1.0).collect()
}

/// Searches `(r, b)` for the certificate with the largest certified rate.
///
/// A coarse grid over `(0, 1)^2` is followed by [`REFINE_ROUNDS`] rounds of
/// local refinement, each 10x finer. At each point `nu` is the largest value
/// allowed by both inequalities, shrunk by a relative `1e-9` so they hold
/// strictly. The winner is re-verified with [`check_certificate`].
pub fn search_certificate(h_min: u32, opts: &SearchOptions) -> Result<Option<Certificate>, BoundsError> {
    check_h_min(h_min, 1)?;
    if opts.grid < 2 {
        return Err(BoundsError::BadInput("grid must be at least 2".into()));
    }
    if !(opts.c_scale >= 1.0) {
        return Err(BoundsError::BadInput("c_scale must be at least 1".into()));
    }
    let mut step = 1.0 / opts.grid as f64;
    let coarse: Vec<f64> = (1..opts.grid).map(|i| i as f64 * step).collect();
    let Some(mut best) = best_on_grid(h_min, opts, &coarse, &coarse) else {
        return Ok(None);
    };
    for _ in 0..REFINE_ROUNDS {
        let half = REFINE_HALF_WIDTH * step;
        step /= 10.0;
        let (_, r0, b0) = best;
        if let Some(found) = best_on_grid(h_min, opts, &axis(r0, half, step), &axis(b0, half, step)) {
            if found.0 > best.0 {
                best = found;
            }
        }
    }
    let (nu, r, b) = best;
    let cert = Certificate { h_min, nu: nu * (1.0 - NU_SHRINK), r, b, c: opts.c_scale * b * r, eps: opts.eps };
    let check = check_certificate(&cert)?;
    Ok(check.feasible.then_some(cert))
}

/// How a reported bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Formula,
    RootFind,
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundDetail {
    pub name: &'static str,
    /// `None` when the bound is unavailable (e.g. `+inf` upper bound).
    pub value: Option<f64>,
    pub provenance: Provenance,
    pub note: String,
}

/// Every certified bound for one tree law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub h_min: u32,
    pub lambda_brw_lower: f64,
    pub lambda_g_upper_simple: Option<f64>,
    pub lambda_g_upper_refined: Option<f64>,
    pub lambda_l_lower_cert: Option<f64>,
    pub certificate: Option<Certificate>,
    /// `min` of the available `lambda_g` upper bounds.
    pub lambda_g_upper: Option<f64>,
    /// `max` of the available `lambda_l` lower bounds.
    pub lambda_l_lower: f64,
    pub weak_survival: bool,
    /// `"WEAK"` or `"NOT_CERTIFIED"`.
    pub verdict: &'static str,
    /// `"simple"`, `"refined"` or `None`: the cheapest pair that separates.
    pub separated_by: Option<&'static str>,
    pub details: Vec<BoundDetail>,
}

/// Assembles all bounds for `law`. The weak-survival verdict holds when the
/// best `lambda_g` upper bound lies strictly below the best `lambda_l` lower bound.
pub fn bound_report(law: &OffspringDistribution, opts: &SearchOptions) -> Result<BoundReport, BoundsError> {
    let h = law.h_min();
    check_h_min(h, 1)?;
    let brw = lambda_l_lower_brw(h)?;
    let simple = (h >= 2).then(|| lambda_g_upper_simple(h)).transpose()?;
    let refined = match lambda_g_upper_refined(law) {
        Ok(v) => Some(v),
        Err(BoundsError::NoRoot { .. }) => None,
        Err(e) => return Err(e),
    };
    let certificate = search_certificate(h, opts)?;
    let cert_lambda = certificate.map(|c| c.lambda());

    let g_upper = [simple, refined].into_iter().flatten().reduce(f64::min);
    let l_lower = cert_lambda.map_or(brw, |c| c.max(brw));
    let weak = g_upper.is_some_and(|g| g < l_lower);
    let separated_by = if simple.is_some_and(|s| s < brw) {
        Some("simple")
    } else if weak {
        Some("refined")
    } else {
        None
    };

    let details = vec![
        BoundDetail {
            name: "lambda_l_lower_brw",
            value: Some(brw),
            provenance: Provenance::Formula,
            note: "(h_min+1)/(2 sqrt h_min): local survival of the dominating BRW".into(),
        },
        BoundDetail {
            name: "lambda_g_upper_simple",
            value: simple,
            provenance: Provenance::Formula,
            note: "(h_min+1)/(h_min-1), from the block construction at x = h_min".into(),
        },
        BoundDetail {
            name: "lambda_g_upper_refined",
            value: refined,
            provenance: Provenance::RootFind,
            note: format!(
                "smallest lambda with E_X f(X,lambda) > 1, bisection on [{}, {}] to {:e}",
                REFINED_BRACKET.0, REFINED_BRACKET.1, REFINED_TOL
            ),
        },
        BoundDetail {
            name: "lambda_l_lower_cert",
            value: cert_lambda,
            provenance: Provenance::Certificate,
            note: match certificate {
                Some(c) => format!("nu={:.6} r={:.6} b={:.6} c={:.6} eps={:e}", c.nu, c.r, c.b, c.c, c.eps),
                None => "no feasible certificate".into(),
            },
        },
    ];

    Ok(BoundReport {
        h_min: h,
        lambda_brw_lower: brw,
        lambda_g_upper_simple: simple,
        lambda_g_upper_refined: refined,
        lambda_l_lower_cert: cert_lambda,
        certificate,
        lambda_g_upper: g_upper,
        lambda_l_lower: l_lower,
        weak_survival: weak,
        verdict: if weak { "WEAK" } else { "NOT_CERTIFIED" },
        separated_by,
        details,
    })
}
