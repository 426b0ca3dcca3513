//! Monte Carlo checks of the simulation engine against exact laws. Every
//! test pins its seed, so the sampled numbers and hence the assertions are
//! reproducible; tolerances still leave room for several standard errors so
//! the tests survive refactors that reorder draws.

use escapelab::models::{Manifold, VolumeGrowth};
use escapelab::schedule::build_schedule;
use escapelab::sim::{run_ensemble, stationary_sample, PolePolicy, SimConfig};
use escapelab::verify::{stationary_ks_test, wilson_interval};

/// P{sup of standard BM over [0,1] >= 1} = erfc(1/sqrt(2)).
const BARRIER_PROB: f64 = 0.31731050786291415;

fn barrier_estimate(dt: f64, paths: usize, seed: u64, bridge: bool) -> f64 {
    let line = Manifold::euclidean(1).unwrap();
    let mut cfg = SimConfig::new(dt, 1.0, 1e-9, seed, paths);
    cfg.pole = PolePolicy::None;
    cfg.stop_after_levels = true;
    cfg.bridge_correction = bridge;
    let ens = run_ensemble(&line, &cfg, &[(0, 1.0)]).unwrap();
    ens.stats.finite_passages[0].1 as f64 / paths as f64
}

#[test]
fn signed_walk_matches_the_reflection_principle() {
    let paths = 30_000;
    let p = barrier_estimate(1e-3, paths, 71, true);
    let se = (BARRIER_PROB * (1.0 - BARRIER_PROB) / paths as f64).sqrt();
    assert!(
        (p - BARRIER_PROB).abs() < 3.5 * se,
        "estimate {p} is {:.1} standard errors from {BARRIER_PROB}",
        (p - BARRIER_PROB).abs() / se
    );
}

#[test]
fn bridge_correction_removes_most_of_the_coarse_step_bias() {
    let paths = 100_000;
    let with = barrier_estimate(1e-2, paths, 72, true);
    let without = barrier_estimate(1e-2, paths, 72, false);
    let bias_with = (with - BARRIER_PROB).abs();
    let bias_without = (without - BARRIER_PROB).abs();
    assert!(
        bias_without > 0.015,
        "expected a visible miss rate without the correction, got bias {bias_without}"
    );
    assert!(
        bias_without >= 3.0 * bias_with,
        "correction only improved bias {bias_without} to {bias_with}"
    );
}

#[test]
fn halving_the_step_does_not_move_the_law() {
    let coarse = barrier_estimate(4e-3, 40_000, 73, true);
    let fine = barrier_estimate(1e-3, 40_000, 74, true);
    assert!(
        (coarse - fine).abs() < 0.01,
        "estimates at neighboring steps disagree: {coarse} vs {fine}"
    );
}

#[test]
fn dyadic_crossing_medians_scale_like_the_squared_radius() {
    let plane = Manifold::euclidean(2).unwrap();
    let model = VolumeGrowth::FromManifold(plane.clone());
    let s = build_schedule(&model, 3, 5).unwrap();
    let levels = s.passage_levels();
    let mut cfg = SimConfig::new(2e-2, 3000.0, 1.0, 75, 1000);
    cfg.stop_after_levels = true;
    let ens = run_ensemble(&plane, &cfg, &levels).unwrap();
    let median_at = |idx: usize| -> f64 {
        let mut finite: Vec<f64> = ens
            .records
            .iter()
            .map(|r| r.passage_times[idx])
            .filter(|t| t.is_finite())
            .collect();
        assert!(finite.len() > 800, "level {idx} only crossed by {} paths", finite.len());
        finite.sort_by(|a, b| a.total_cmp(b));
        finite[finite.len() / 2]
    };
    let m3 = median_at(1);
    let m4 = median_at(2);
    let m5 = median_at(3);
    for (lo, hi, ratio) in [(m3, m4, m4 / m3), (m4, m5, m5 / m4)] {
        assert!(
            (2.5..=6.5).contains(&ratio),
            "median {lo} -> {hi} scaled by {ratio}, expected roughly 4"
        );
    }
}

#[test]
fn reflected_walk_in_the_ball_has_the_area_law() {
    let plane = Manifold::euclidean(2).unwrap();
    let mut cfg = SimConfig::new(5e-5, 60.0, 0.5, 76, 20);
    cfg.checkpoints = 4;
    let samples = stationary_sample(&plane, 1.0, &cfg, 2.0, 0.1).unwrap();
    assert!(samples.len() >= 10_000);
    let check = stationary_ks_test(&samples, &plane, 1.0, 0.05).unwrap();
    assert!(check.passed, "KS statistic {} too large", check.statistic);
}

#[test]
fn reflected_walk_on_the_line_is_uniform() {
    let line = Manifold::euclidean(1).unwrap();
    let cfg = SimConfig::new(5e-5, 60.0, 0.5, 77, 20);
    let samples = stationary_sample(&line, 1.0, &cfg, 2.0, 0.1).unwrap();
    let check = stationary_ks_test(&samples, &line, 1.0, 0.05).unwrap();
    assert!(check.passed, "KS statistic {} too large", check.statistic);
}

#[test]
fn reflected_hyperbolic_walk_matches_its_mass_ratio() {
    let m = Manifold::hyperbolic(2, 1.0).unwrap();
    let cfg = SimConfig::new(5e-5, 60.0, 1.0, 78, 20);
    let samples = stationary_sample(&m, 2.0, &cfg, 2.0, 0.1).unwrap();
    let check = stationary_ks_test(&samples, &m, 2.0, 0.05).unwrap();
    assert!(check.passed, "KS statistic {} too large", check.statistic);
}

#[test]
fn hyperbolic_escape_is_ballistic_at_unit_half_speed() {
    let m = Manifold::hyperbolic(2, 1.0).unwrap();
    let cfg = SimConfig::new(1e-3, 100.0, 1.0, 79, 300);
    let ens = run_ensemble(&m, &cfg, &[]).unwrap();
    let slope = ens.stats.mean_final_radius / 100.0;
    assert!(
        (0.4..=0.6).contains(&slope),
        "mean terminal radius over time was {slope}, expected about one half"
    );
}

#[test]
fn interval_widths_shrink_like_the_root_of_the_sample_size() {
    let mut widths = Vec::new();
    for (paths, seed) in [(1_000usize, 80u64), (10_000, 81), (100_000, 82)] {
        let p = barrier_estimate(1e-2, paths, seed, true);
        let hits = (p * paths as f64).round() as usize;
        let (lo, hi) = wilson_interval(hits, paths, 1.96);
        widths.push(hi - lo);
    }
    let expected = 10f64.sqrt();
    for w in widths.windows(2) {
        let shrink = w[0] / w[1];
        assert!(
            shrink > expected / 1.5 && shrink < expected * 1.5,
            "interval width went {} -> {}, shrink factor {shrink} not near sqrt(10)",
            w[0],
            w[1]
        );
    }
}
