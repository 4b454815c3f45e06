//! Contact process with exclusion and degree-normalized infection rates.
//!
//! An infected vertex recovers at rate 1 and, at total rate `lambda`, picks a
//! uniformly random neighbor and tries to infect it; an attempt onto an
//! infected vertex is suppressed. Every infected vertex carries the same
//! total event rate `1 + lambda`, so the simulation draws the next event
//! time from the aggregate rate and the acting vertex uniformly.
//!
//! Several rates are run on one graphical representation: transmission marks
//! arrive at total rate `Lambda = max(lambdas)` and carry a uniform label
//! `u`; a mark is used by level `lambda` iff `u < lambda / Lambda`. Active
//! mark sets are nested in `lambda`, hence so are the infected sets.

use rand::Rng;
use serde::Serialize;

use crate::bounds::{BoundsError, Certificate};
use crate::tree::{TreeError, TreeStore, VertexId};

const ABSENT: u32 = u32::MAX;

/// Default cap on the infected-set size.
pub const DEFAULT_MAX_INFECTED: usize = 10_000;
/// Default depth beyond which infections are blocked and counted as frontier exits.
pub const DEFAULT_DEPTH_CAP: u32 = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Certificate(#[from] BoundsError),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("coupling violated at t={time}: vertex {vertex} infected at lambda={lower} but not at lambda={upper}")]
    CouplingViolation { time: f64, vertex: u32, lower: f64, upper: f64 },
}

/// Resource caps for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CpCaps {
    /// A level whose infected set grows past this size stops and is flagged capped.
    pub max_infected: usize,
    /// Infection attempts onto vertices deeper than this are blocked and counted.
    pub depth_cap: u32,
}

impl Default for CpCaps {
    fn default() -> Self {
        Self { max_infected: DEFAULT_MAX_INFECTED, depth_cap: DEFAULT_DEPTH_CAP }
    }
}

/// Outcome of one trial at one rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpSummary {
    pub lambda: f64,
    pub died_out: bool,
    /// Extinction time, capping time, or `t_max`.
    pub t_end: f64,
    pub max_infected: usize,
    /// Number of times the root went from healthy to infected.
    pub root_reinfections: u32,
    /// Last time the root was infected (its last recovery, or `t_end` if
    /// still infected).
    pub last_root_time: f64,
    /// Root infected at some time in `[0.75 t_max, t_max]`.
    pub root_in_final_quarter: bool,
    pub capped: bool,
    pub frontier_exit: bool,
    pub frontier_exits: u64,
    pub births: u64,
    pub suppressed_births: u64,
    pub deaths: u64,
}

/// Read-only view of one level's infected set.
pub struct InfectedSet<'a> {
    members: &'a [VertexId],
    pos: &'a [u32],
}

impl InfectedSet<'_> {
    pub fn contains(&self, v: VertexId) -> bool {
        self.pos.get(v.index()).is_some_and(|&p| p != ABSENT)
    }

    pub fn members(&self) -> &[VertexId] {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

struct Level {
    lambda: f64,
    /// `lambda / Lambda`.
    accept: f64,
    members: Vec<VertexId>,
    pos: Vec<u32>,
    running: bool,
    root_since: Option<f64>,
    summary: CpSummary,
}

impl Level {
    fn new(lambda: f64, lambda_max: f64) -> Self {
        let mut level = Self {
            lambda,
            accept: lambda / lambda_max,
            members: Vec::new(),
            pos: Vec::new(),
            running: true,
            root_since: Some(0.0),
            summary: CpSummary {
                lambda,
                died_out: false,
                t_end: 0.0,
                max_infected: 1,
                root_reinfections: 0,
                last_root_time: 0.0,
                root_in_final_quarter: false,
                capped: false,
                frontier_exit: false,
                frontier_exits: 0,
                births: 0,
                suppressed_births: 0,
                deaths: 0,
            },
        };
        level.insert(VertexId::ROOT);
        level
    }

    #[inline]
    fn contains(&self, v: VertexId) -> bool {
        self.pos.get(v.index()).is_some_and(|&p| p != ABSENT)
    }

    fn insert(&mut self, v: VertexId) {
        if self.pos.len() <= v.index() {
            self.pos.resize(v.index() + 1, ABSENT);
        }
        debug_assert_eq!(self.pos[v.index()], ABSENT);
        self.pos[v.index()] = self.members.len() as u32;
        self.members.push(v);
    }

    fn remove(&mut self, v: VertexId) {
        let p = self.pos[v.index()] as usize;
        let last = *self.members.last().expect("non-empty");
        self.members.swap_remove(p);
        if last != v {
            self.pos[last.index()] = p as u32;
        }
        self.pos[v.index()] = ABSENT;
    }

    fn view(&self) -> InfectedSet<'_> {
        InfectedSet { members: &self.members, pos: &self.pos }
    }

    fn close(&mut self, t: f64) {
        self.running = false;
        self.summary.t_end = t;
        if self.root_since.take().is_some() {
            self.summary.last_root_time = t;
        }
    }
}

/// Observer callback: `(sample index, sample time, tree, infected set of the first level)`.
type Observer<'o> = dyn FnMut(usize, f64, &TreeStore, &InfectedSet<'_>) + 'o;

fn validate_lambdas(lambdas: &[f64]) -> Result<(), CpError> {
    if lambdas.is_empty() {
        return Err(CpError::BadInput("at least one lambda is required".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(CpError::BadInput("lambdas must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(CpError::BadInput("lambdas must be in ascending order".into()));
    }
    Ok(())
}

fn run_levels<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambdas: &[f64],
    t_max: f64,
    rng: &mut R,
    caps: CpCaps,
    sample_times: &[f64],
    observer: Option<&mut Observer<'_>>,
) -> Result<Vec<CpSummary>, CpError> {
    validate_lambdas(lambdas)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(CpError::BadInput(format!("t_max must be positive, got {t_max}")));
    }
    if caps.max_infected == 0 {
        return Err(CpError::BadInput("max_infected must be at least 1".into()));
    }
    let lambda_max = *lambdas.last().expect("non-empty");
    let total_rate = 1.0 + lambda_max;
    let window_start = 0.75 * t_max;
    let mut levels: Vec<Level> = lambdas.iter().map(|&l| Level::new(l, lambda_max)).collect();
    let mut observer = observer;
    let mut next_sample = 0usize;
    let mut t = 0.0f64;

    while let Some(top) = levels.iter().rposition(|l| l.running) {
        let n = levels[top].members.len();
        let dt = -(1.0 - rng.random::<f64>()).ln() / (n as f64 * total_rate);
        let t_next = t + dt;

        if let Some(obs) = observer.as_deref_mut() {
            while next_sample < sample_times.len() && sample_times[next_sample] < t_next.min(t_max) {
                obs(next_sample, sample_times[next_sample], store, &levels[0].view());
                next_sample += 1;
            }
        }
        if t_next > t_max {
            t = t_max;
            break;
        }
        t = t_next;

        let v = levels[top].members[rng.random_range(0..n)];
        if rng.random::<f64>() * total_rate < 1.0 {
            // recovery mark at v, used by every level holding v
            for level in levels[..=top].iter_mut().filter(|l| l.running && l.contains(v)) {
                level.remove(v);
                level.summary.deaths += 1;
                if v == VertexId::ROOT {
                    level.root_since = None;
                    level.summary.last_root_time = t;
                }
                if level.members.is_empty() {
                    level.summary.died_out = true;
                    level.close(t);
                }
            }
            check_nested(&levels, v, t)?;
            continue;
        }

        // transmission mark v -> w with label u
        let deg = store.degree(v)?;
        let w = store.neighbor(v, rng.random_range(0..deg))?;
        let u = rng.random::<f64>();
        let blocked = store.depth(w)? > caps.depth_cap;
        for level in levels[..=top].iter_mut().filter(|l| l.running && u < l.accept && l.contains(v)) {
            if blocked {
                level.summary.frontier_exits += 1;
                level.summary.frontier_exit = true;
            } else if level.contains(w) {
                level.summary.suppressed_births += 1;
            } else {
                level.insert(w);
                let s = &mut level.summary;
                s.births += 1;
                s.max_infected = s.max_infected.max(level.members.len());
                if w == VertexId::ROOT {
                    s.root_reinfections += 1;
                    level.root_since = Some(t);
                }
                if level.members.len() > caps.max_infected {
                    level.summary.capped = true;
                    level.close(t);
                }
            }
        }
        check_nested(&levels, w, t)?;
    }

    if let Some(obs) = observer {
        while next_sample < sample_times.len() && sample_times[next_sample] <= t_max {
            obs(next_sample, sample_times[next_sample], store, &levels[0].view());
            next_sample += 1;
        }
    }
    for level in levels.iter_mut().filter(|l| l.running) {
        level.close(t);
    }
    Ok(levels
        .into_iter()
        .map(|mut l| {
            l.summary.root_in_final_quarter = l.summary.last_root_time >= window_start;
            l.summary
        })
        .collect())
}

/// Membership of `v` must be monotone in the level index across running levels.
fn check_nested(levels: &[Level], v: VertexId, time: f64) -> Result<(), CpError> {
    let mut prev: Option<&Level> = None;
    for level in levels.iter().filter(|l| l.running) {
        if let Some(p) = prev {
            if p.contains(v) && !level.contains(v) {
                return Err(CpError::CouplingViolation { time, vertex: v.0, lower: p.lambda, upper: level.lambda });
            }
        }
        prev = Some(level);
    }
    Ok(())
}

/// One CP trial from a single infected root.
pub fn run_cp<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambda: f64,
    t_max: f64,
    rng: &mut R,
    caps: CpCaps,
) -> Result<CpSummary, CpError> {
    Ok(run_levels(store, &[lambda], t_max, rng, caps, &[], None)?.remove(0))
}

/// CP trials at every rate in `lambdas` (ascending) on one shared graphical
/// representation. Nestedness of the infected sets is checked at every event.
pub fn run_cp_coupled<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambdas: &[f64],
    t_max: f64,
    rng: &mut R,
    caps: CpCaps,
) -> Result<Vec<CpSummary>, CpError> {
    run_levels(store, lambdas, t_max, rng, caps, &[], None)
}

/// Like [`run_cp`], calling `observe` with the infected set at each of the
/// ascending `sample_times` in `[0, t_max]`.
pub fn run_cp_observed<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambda: f64,
    t_max: f64,
    rng: &mut R,
    caps: CpCaps,
    sample_times: &[f64],
    mut observe: impl FnMut(usize, f64, &TreeStore, &InfectedSet<'_>),
) -> Result<CpSummary, CpError> {
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(CpError::BadInput("sample times must be ascending".into()));
    }
    Ok(run_levels(store, &[lambda], t_max, rng, caps, sample_times, Some(&mut observe))?.remove(0))
}

/// `W(xi) = sum_{v in xi} r^depth(v) (1 - b theta(v))`, where `theta(v)`
/// indicates that the parent of `v` is infected. The root's parent is taken
/// to be the augmenting child in AGW mode; in GW mode the root has none.
pub fn weight(store: &TreeStore, infected: &InfectedSet<'_>, cert: &Certificate) -> Result<f64, CpError> {
    cert.validate()?;
    weight_unchecked(store, infected, cert)
}

fn weight_unchecked(store: &TreeStore, infected: &InfectedSet<'_>, cert: &Certificate) -> Result<f64, CpError> {
    let root_parent = match store.mode() {
        crate::tree::TreeMode::Agw => {
            store.children_if_explored(VertexId::ROOT)?.and_then(|kids| kids.get(kids.len().wrapping_sub(1)))
        }
        crate::tree::TreeMode::Gw => None,
    };
    let mut total = 0.0;
    for &v in infected.members() {
        let parent = if v == VertexId::ROOT { root_parent } else { store.parent(v)? };
        let theta = parent.is_some_and(|p| infected.contains(p));
        let k = store.depth(v)? as i32;
        total += cert.r.powi(k) * if theta { 1.0 - cert.b } else { 1.0 };
    }
    Ok(total)
}

/// Runs one CP trial at `lambda` and returns `W(xi(t))` at each sample time.
pub fn weight_process<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambda: f64,
    cert: &Certificate,
    sample_times: &[f64],
    caps: CpCaps,
    rng: &mut R,
) -> Result<Vec<f64>, CpError> {
    cert.validate()?;
    let t_max = sample_times.last().copied().unwrap_or(0.0);
    if t_max <= 0.0 {
        return Err(CpError::BadInput("need at least one positive sample time".into()));
    }
    let mut out = vec![0.0; sample_times.len()];
    let mut failure = None;
    run_cp_observed(store, lambda, t_max, rng, caps, sample_times, |i, _, tree, set| {
        match weight_unchecked(tree, set, cert) {
            Ok(w) => out[i] = w,
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Summary statistics of root reinfection across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalStats {
    pub trials: usize,
    pub mean_reinfections: f64,
    /// Standard error of `mean_reinfections`.
    pub se_reinfections: f64,
    pub max_reinfections: u32,
    pub mean_last_root_time: f64,
    /// Median of the last root-occupation times.
    pub median_last_root_time: f64,
    /// Fraction of trials with the root infected in the final quarter.
    pub final_quarter_fraction: f64,
}

pub fn local_survival_stat(summaries: &[CpSummary]) -> LocalStats {
    let n = summaries.len();
    if n == 0 {
        return LocalStats {
            trials: 0,
            mean_reinfections: 0.0,
            se_reinfections: 0.0,
            max_reinfections: 0,
            mean_last_root_time: 0.0,
            median_last_root_time: 0.0,
            final_quarter_fraction: 0.0,
        };
    }
    let nf = n as f64;
    let epochs: Vec<f64> = summaries.iter().map(|s| s.root_reinfections as f64).collect();
    let mean = epochs.iter().sum::<f64>() / nf;
    let var = if n > 1 { epochs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
    let mut last: Vec<f64> = summaries.iter().map(|s| s.last_root_time).collect();
    last.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { last[n / 2] } else { 0.5 * (last[n / 2 - 1] + last[n / 2]) };
    LocalStats {
        trials: n,
        mean_reinfections: mean,
        se_reinfections: (var / nf).sqrt(),
        max_reinfections: summaries.iter().map(|s| s.root_reinfections).max().unwrap_or(0),
        mean_last_root_time: last.iter().sum::<f64>() / nf,
        median_last_root_time: median,
        final_quarter_fraction: summaries.iter().filter(|s| s.root_in_final_quarter).count() as f64 / nf,
    }
}

/// Per-event record of a paired CP / continuous-time BRW run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedPoint {
    pub time: f64,
    pub cp_infected: usize,
    pub brw_particles: usize,
}

/// Runs a continuous-time BRW (death rate 1, birth rate `lambda` to a
/// uniform neighbor, no exclusion) together with a CP embedded in it: each
/// infected vertex is carried by one designated BRW particle whose marks
/// drive it. Returns the count trajectory; errors if the CP ever leaves the
/// BRW's support.
pub fn run_cp_brw_paired<R: Rng + ?Sized>(
    store: &mut TreeStore,
    lambda: f64,
    t_max: f64,
    max_particles: usize,
    rng: &mut R,
) -> Result<Vec<PairedPoint>, CpError> {
    validate_lambdas(&[lambda])?;
    // particles: (vertex, designated)
    let mut particles: Vec<(VertexId, bool)> = vec![(VertexId::ROOT, true)];
    let mut occupied: Vec<u32> = vec![1];
    let mut infected: Vec<bool> = vec![true];
    let mut cp_count = 1usize;
    let mut t = 0.0;
    let mut out = vec![PairedPoint { time: 0.0, cp_infected: 1, brw_particles: 1 }];
    while !particles.is_empty() && particles.len() <= max_particles {
        let n = particles.len();
        t += -(1.0 - rng.random::<f64>()).ln() / (n as f64 * (1.0 + lambda));
        if t > t_max {
            break;
        }
        let i = rng.random_range(0..n);
        let (v, designated) = particles[i];
        if rng.random::<f64>() * (1.0 + lambda) < 1.0 {
            particles.swap_remove(i);
            occupied[v.index()] -= 1;
            if designated {
                infected[v.index()] = false;
                cp_count -= 1;
            }
        } else {
            let deg = store.degree(v)?;
            let w = store.neighbor(v, rng.random_range(0..deg))?;
            if occupied.len() < store.len() {
                occupied.resize(store.len(), 0);
                infected.resize(store.len(), false);
            }
            occupied[w.index()] += 1;
            let newly = designated && !infected[w.index()];
            if newly {
                infected[w.index()] = true;
                cp_count += 1;
            }
            particles.push((w, newly));
        }
        let point = PairedPoint { time: t, cp_infected: cp_count, brw_particles: particles.len() };
        if cp_count > particles.len() || infected.iter().zip(&occupied).any(|(&i, &o)| i && o == 0) {
            return Err(CpError::BadInput(format!("domination violated at t={t}")));
        }
        out.push(point);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::OffspringDistribution;
    use crate::rng::{stream, Purpose};
    use crate::tree::TreeMode;

    fn regular(seed: u64) -> TreeStore {
        TreeStore::new(OffspringDistribution::degenerate(4).unwrap(), TreeMode::Agw, seed).unwrap()
    }

    #[test]
    fn input_validation() {
        let mut t = regular(0);
        let mut rng = stream(0, 0, Purpose::Dynamics);
        assert!(run_cp(&mut t, 0.0, 1.0, &mut rng, CpCaps::default()).is_err());
        assert!(run_cp(&mut t, 1.0, 0.0, &mut rng, CpCaps::default()).is_err());
        assert!(run_cp_coupled(&mut t, &[2.0, 1.0], 1.0, &mut rng, CpCaps::default()).is_err());
        assert!(run_cp_coupled(&mut t, &[], 1.0, &mut rng, CpCaps::default()).is_err());
    }

    #[test]
    fn tiny_rate_is_pure_death() {
        let n = 100_000;
        let mut total = 0.0;
        for i in 0..n {
            let mut t = regular(i);
            let mut rng = stream(3, i, Purpose::Dynamics);
            let s = run_cp(&mut t, 1e-6, 1000.0, &mut rng, CpCaps::default()).unwrap();
            assert!(s.died_out);
            total += s.t_end;
        }
        let mean = total / n as f64;
        // exp(1) lifetime: sd 1
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn equal_levels_give_identical_trajectories() {
        for i in 0..50 {
            let mut t = regular(i);
            let mut rng = stream(4, i, Purpose::Dynamics);
            let s = run_cp_coupled(&mut t, &[1.7, 1.7], 10.0, &mut rng, CpCaps::default()).unwrap();
            assert_eq!(s[0], s[1]);
        }
    }

    #[test]
    fn coupled_runs_are_nested_and_monotone() {
        for i in 0..200 {
            let mut t = regular(i);
            let mut rng = stream(5, i, Purpose::Dynamics);
            let caps = CpCaps { max_infected: 500, depth_cap: 60 };
            let s = run_cp_coupled(&mut t, &[1.0, 1.5], 15.0, &mut rng, caps).unwrap();
            // higher rate dies no earlier
            if s[1].died_out {
                assert!(s[0].died_out && s[0].t_end <= s[1].t_end);
            }
            if !s[1].capped {
                assert!(s[0].max_infected <= s[1].max_infected);
            }
        }
    }

    #[test]
    fn exclusion_accounting() {
        let mut suppressed = 0;
        for i in 0..20 {
            let mut t = regular(i);
            let mut rng = stream(6, i, Purpose::Dynamics);
            let mut final_size = 0;
            let s = run_cp_observed(&mut t, 3.0, 5.0, &mut rng, CpCaps::default(), &[5.0], |_, _, _, set| {
                final_size = set.len() as i64;
            })
            .unwrap();
            // suppressed attempts change nothing: size = 1 + births - deaths
            assert_eq!(final_size, 1 + s.births as i64 - s.deaths as i64);
            if s.died_out {
                assert_eq!(final_size, 0);
            }
            suppressed += s.suppressed_births;
        }
        assert!(suppressed > 0);
    }

    #[test]
    fn birth_targets_are_uniform_over_neighbors() {
        // a cap of one infected vertex freezes the run at its first successful birth
        let caps = CpCaps { max_infected: 1, depth_cap: 60 };
        let mut t = regular(1);
        let first_child = t.children(VertexId::ROOT).unwrap().get(0).unwrap().0;
        let mut hits = [0u64; 5];
        let mut births = 0u64;
        for i in 0..100_000u64 {
            let mut rng = stream(7, i, Purpose::Dynamics);
            run_cp_observed(&mut t, 4.0, 100.0, &mut rng, caps, &[100.0], |_, _, _, set| {
                if set.len() == 2 {
                    let w = set.members().iter().find(|&&v| v != VertexId::ROOT).unwrap();
                    hits[(w.0 - first_child) as usize] += 1;
                    births += 1;
                }
            })
            .unwrap();
        }
        let sigma = (0.2 * 0.8 / births as f64).sqrt();
        for h in hits {
            assert!((h as f64 / births as f64 - 0.2).abs() < 4.0 * sigma, "{hits:?}");
        }
    }

    #[test]
    fn weight_examples() {
        let cert = Certificate::with_default_c(4, 0.3, 0.437, 0.256, 1e-4);
        let mut t = regular(0);
        let kids = t.children(VertexId::ROOT).unwrap();
        let c = kids.get(0).unwrap();
        let aug = t.augmentation_child().unwrap();
        let pos_of = |members: &[VertexId], len: usize| {
            let mut pos = vec![ABSENT; len];
            for (i, v) in members.iter().enumerate() {
                pos[v.index()] = i as u32;
            }
            pos
        };
        let only_root = [VertexId::ROOT];
        let p = pos_of(&only_root, t.len());
        let w = weight(&t, &InfectedSet { members: &only_root, pos: &p }, &cert).unwrap();
        assert_eq!(w, 1.0);
        let pair = [VertexId::ROOT, c];
        let p = pos_of(&pair, t.len());
        let w = weight(&t, &InfectedSet { members: &pair, pos: &p }, &cert).unwrap();
        assert!((w - (1.0 + 0.437 * (1.0 - 0.256))).abs() < 1e-15);
        // the augmenting child plays the root's parent
        let pair = [VertexId::ROOT, aug];
        let p = pos_of(&pair, t.len());
        let w = weight(&t, &InfectedSet { members: &pair, pos: &p }, &cert).unwrap();
        assert!((w - ((1.0 - 0.256) + 0.437 * (1.0 - 0.256))).abs() < 1e-15);
        let bad = Certificate::with_default_c(4, 0.3, 1.5, 0.256, 1e-4);
        assert!(weight(&t, &InfectedSet { members: &pair, pos: &p }, &bad).is_err());
    }

    #[test]
    fn observer_sees_initial_state() {
        let mut t = regular(2);
        let mut rng = stream(9, 0, Purpose::Dynamics);
        let mut seen = Vec::new();
        run_cp_observed(&mut t, 1.0, 2.0, &mut rng, CpCaps::default(), &[0.0, 1.0, 2.0], |i, time, _, set| {
            seen.push((i, time, set.len()));
        })
        .unwrap();
        assert_eq!(seen.len(), 3);
        assert_eq!(seen[0], (0, 0.0, 1));
    }

    #[test]
    fn brw_dominates_cp() {
        for i in 0..200 {
            let mut t = regular(i);
            let mut rng = stream(10, i, Purpose::Dynamics);
            let path = run_cp_brw_paired(&mut t, 2.0, 4.0, 5_000, &mut rng).unwrap();
            assert!(path.iter().all(|p| p.cp_infected <= p.brw_particles));
        }
    }

    #[test]
    fn local_stats() {
        let mut t = regular(3);
        let mut rng = stream(11, 0, Purpose::Dynamics);
        let s = run_cp(&mut t, 0.5, 5.0, &mut rng, CpCaps::default()).unwrap();
        if s.died_out {
            assert!(s.last_root_time <= s.t_end && s.t_end <= 5.0);
        }
        let stats = local_survival_stat(&[s.clone(), s]);
        assert_eq!(stats.trials, 2);
        assert_eq!(stats.se_reinfections, 0.0);
    }
}
