use gwcp_core::cp::{run_cp, weight_process};
use gwcp_core::rng::{derive_seed, stream, Purpose};
use gwcp_core::{Certificate, CpCaps, OffspringDistribution, TreeMode, TreeStore};

fn tree(i: u64, seed: u64) -> TreeStore {
    TreeStore::new(OffspringDistribution::degenerate(4).unwrap(), TreeMode::Agw, derive_seed(seed, i, Purpose::Tree))
        .unwrap()
}

#[test]
fn weight_decays_at_certified_rate() {
    let cert = Certificate::with_default_c(4, 0.3, 0.437, 0.256, 1e-4);
    let times = [0.0, 1.0, 2.0, 4.0, 8.0];
    let caps = CpCaps { max_infected: 2000, ..CpCaps::default() };
    let trials = 10_000u64;
    let mut paths = Vec::with_capacity(trials as usize);
    for i in 0..trials {
        let mut t = tree(i, 31);
        let mut rng = stream(31, i, Purpose::Dynamics);
        paths.push(weight_process(&mut t, cert.lambda(), &cert, &times, caps, &mut rng).unwrap());
    }
    assert!(paths.iter().all(|p| p[0] == 1.0));
    for k in 1..times.len() {
        let diffs: Vec<f64> = paths.iter().map(|p| p[k] - p[k - 1]).collect();
        let mean = diffs.iter().sum::<f64>() / trials as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(mean < 3.0 * se, "step {k}: mean increment {mean} (se {se})");
    }
    let last = paths.iter().map(|p| p[times.len() - 1]).sum::<f64>() / trials as f64;
    assert!(last < 0.5, "{last}");
}

#[test]
fn root_epochs_grow_far_above_threshold() {
    // a shallow depth cap keeps the far-supercritical process in a finite ball
    let caps = CpCaps { max_infected: 100_000, depth_cap: 4 };
    let mut short = 0u64;
    let mut long = 0u64;
    for i in 0..200 {
        let s = run_cp(&mut tree(i, 41), 5.0, 10.0, &mut stream(41, i, Purpose::Dynamics), caps).unwrap();
        let l = run_cp(&mut tree(i, 41), 5.0, 20.0, &mut stream(41, i, Purpose::Dynamics), caps).unwrap();
        assert!(l.root_reinfections >= s.root_reinfections);
        short += s.root_reinfections as u64;
        long += l.root_reinfections as u64;
    }
    assert!(long as f64 > 1.5 * short as f64, "{short} -> {long}");
}

#[test]
fn epochs_stabilize_below_local_threshold() {
    let caps = CpCaps::default();
    let mut short = 0u64;
    let mut long = 0u64;
    let trials = 1000;
    for i in 0..trials {
        let s = run_cp(&mut tree(i, 51), 1.3, 20.0, &mut stream(51, i, Purpose::Dynamics), caps).unwrap();
        let l = run_cp(&mut tree(i, 51), 1.3, 40.0, &mut stream(51, i, Purpose::Dynamics), caps).unwrap();
        short += s.root_reinfections as u64;
        long += l.root_reinfections as u64;
    }
    eprintln!("epochs at lambda=1.3: t=20 {short}, t=40 {long}");
    assert!((long - short) as f64 <= 0.1 * short as f64 + 10.0);
}

#[test]
fn below_brw_floor_survival_vanishes() {
    let caps = CpCaps::default();
    let alive = |t_max: f64| {
        (0..1000u64)
            .filter(|&i| {
                let s = run_cp(&mut tree(i, 61), 1.0, t_max, &mut stream(61, i, Purpose::Dynamics), caps).unwrap();
                !s.died_out
            })
            .count()
    };
    let counts = [alive(5.0), alive(10.0), alive(20.0)];
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[2] <= 10, "{counts:?}");
}

#[test]
fn short_runs_end_where_they_say() {
    for i in 0..500 {
        let s = run_cp(&mut tree(i, 71), 0.5, 5.0, &mut stream(71, i, Purpose::Dynamics), CpCaps::default()).unwrap();
        assert!(s.last_root_time <= s.t_end && s.t_end <= 5.0);
        if s.died_out {
            assert!(s.t_end < 5.0);
        }
    }
}
