//! Euler-Maruyama simulation of the radial diffusion dr = b(r) dt + dW with
//! b the manifold's radial drift.
//!
//! Paths are cheap, numerous, and independent, so the engine is built around
//! reproducibility: path i draws from stream i of a counter-based generator
//! seeded once per run, which makes every path a pure function of
//! (seed, path index, config), whatever order or thread executes it.
//! Trajectories are NOT stored; each path keeps a thinned set of checkpoints
//! on a geometric time grid (with the running supremum) plus the first-passage
//! time of every watched sphere.
//!
//! First passages are detected by endpoint comparison plus the Brownian
//! bridge correction: a step from x to y below a level a still crossed it
//! with probability exp(-2 (a-x)(a-y) / dt). Without this the O(sqrt(dt))
//! miss rate visibly biases passage statistics; with it the 1D oracle test
//! matches the reflection-principle law at coarse steps.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::models::Manifold;
use crate::schedule::CrossingSchedule;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("integrator failure on path {path_index} at step {step}: {detail}")]
    Integrator { path_index: u64, step: u64, detail: String },
    #[error(
        "path was recorded against levels starting at n = {got_first} (count {got_len}), \
         schedule expects n = {expected_first} (count {expected_len})"
    )]
    ScheduleMismatch { expected_first: u32, expected_len: usize, got_first: u32, got_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed,
    /// dt scaled by min(1, max(r^2, floor)); keeps cusp necks resolved
    /// without paying for fine steps at large radius.
    AdaptiveRadial { floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Free,
    /// Reflect at the sphere of this radius; the process lives in [0, R].
    ReflectAt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolePolicy {
    /// Fold negative excursions back: r -> |r|. The default.
    Reflect,
    /// Leave the signed process alone. Only valid for drift-free dimension
    /// one, where the signed value is itself a Brownian motion and level
    /// passages follow the one-sided barrier law.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub r0: f64,
    pub boundary: Boundary,
    pub pole: PolePolicy,
    pub seed: u64,
    pub paths: usize,
    pub step_policy: StepPolicy,
    /// Nominal number of geometric checkpoint times per path.
    pub checkpoints: usize,
    /// End each path once its topmost watched level is crossed.
    pub stop_after_levels: bool,
    /// Apply the Brownian bridge crossing probability between step endpoints.
    /// On by default; turning it off exposes the discretization miss rate.
    pub bridge_correction: bool,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, r0: f64, seed: u64, paths: usize) -> Self {
        SimConfig {
            dt,
            horizon,
            r0,
            boundary: Boundary::Free,
            pole: PolePolicy::Reflect,
            seed,
            paths,
            step_policy: StepPolicy::Fixed,
            checkpoints: 48,
            stop_after_levels: false,
            bridge_correction: true,
        }
    }

    pub fn validate(&self, manifold: &Manifold) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(SimError::Config(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(SimError::Config(format!("start radius must be positive, got {}", self.r0)));
        }
        if self.paths == 0 {
            return Err(SimError::Config("path count must be at least 1".into()));
        }
        if self.checkpoints == 0 {
            return Err(SimError::Config("checkpoint count must be at least 1".into()));
        }
        if let Boundary::ReflectAt(r) = self.boundary {
            if !(r > self.r0) {
                return Err(SimError::Config(format!(
                    "reflecting wall {r} must lie above the start radius {}",
                    self.r0
                )));
            }
        }
        if let StepPolicy::AdaptiveRadial { floor } = self.step_policy {
            if !(floor > 0.0) {
                return Err(SimError::Config(format!(
                    "adaptive step floor must be positive, got {floor}"
                )));
            }
        }
        if self.pole == PolePolicy::None {
            if manifold.dim != 1 {
                return Err(SimError::Config(
                    "pole policy `none` leaves the signed process free and is only valid in \
                     dimension one, where the drift vanishes"
                        .into(),
                ));
            }
            if matches!(self.boundary, Boundary::ReflectAt(_)) {
                return Err(SimError::Config(
                    "a reflecting wall needs the folded process; use the `reflect` pole policy"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub radius: f64,
    pub running_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_index: u64,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Index n of the first watched level; passage_times[i] belongs to n + i.
    pub first_level_n: u32,
    /// First-passage times aligned with the watched levels, infinity when the
    /// level was not reached within the horizon.
    pub passage_times: Vec<f64>,
    pub final_time: f64,
    pub final_radius: f64,
    pub running_sup: f64,
    pub steps: u64,
    /// Steps on which the drift cap |b dt| <= r/2 engaged.
    pub drift_caps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub paths: usize,
    pub mean_final_radius: f64,
    pub mean_running_sup: f64,
    pub mean_steps: f64,
    /// Per watched level (n, count of paths with a finite passage time).
    pub finite_passages: Vec<(u32, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub config: SimConfig,
    pub model_spec: String,
    pub levels: Vec<(u32, f64)>,
    pub records: Vec<PathRecord>,
    pub stats: EnsembleStats,
}

impl PathEnsemble {
    /// Assemble an ensemble from already-built records, recomputing the
    /// aggregate statistics. Used when records are reloaded from persisted
    /// tables rather than simulated in this process.
    pub fn from_records(
        config: SimConfig,
        model_spec: String,
        levels: Vec<(u32, f64)>,
        records: Vec<PathRecord>,
    ) -> PathEnsemble {
        let stats = compute_stats(&records, &levels);
        PathEnsemble { config, model_spec, levels, records, stats }
    }
}

/// Fixed-shape pairwise summation; the result depends only on the order of
/// `xs`, never on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn checkpoint_grid(cfg: &SimConfig) -> Vec<f64> {
    if cfg.horizon <= 0.0 {
        return vec![0.0];
    }
    let lo = cfg.dt.max(cfg.horizon / 1.0e6).min(cfg.horizon);
    let m = cfg.checkpoints;
    if m == 1 || lo >= cfg.horizon {
        return vec![cfg.horizon];
    }
    let ratio = cfg.horizon / lo;
    let mut grid = Vec::with_capacity(m);
    for j in 0..m {
        let t = lo * ratio.powf(j as f64 / (m - 1) as f64);
        if grid.last().map_or(true, |&prev: &f64| t > prev * (1.0 + 1e-12)) {
            grid.push(t);
        }
    }
    *grid.last_mut().unwrap() = cfg.horizon;
    grid
}

/// Integrate one path. `levels` must be sorted by radius; pass an empty slice
/// when no passages are watched.
pub fn simulate_radial_path(
    manifold: &Manifold,
    cfg: &SimConfig,
    levels: &[(u32, f64)],
    path_index: u64,
) -> Result<PathRecord, SimError> {
    cfg.validate(manifold)?;
    for w in levels.windows(2) {
        if !(w[1].1 > w[0].1) || w[1].0 != w[0].0 + 1 {
            return Err(SimError::Config(
                "watched levels must have consecutive indices and increasing radii".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path_index);

    let grid = checkpoint_grid(cfg);
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;

    let mut passage_times = vec![f64::INFINITY; levels.len()];
    let mut next_level = 0usize;
    while next_level < levels.len() && levels[next_level].1 <= cfg.r0 {
        passage_times[next_level] = 0.0;
        next_level += 1;
    }

    let mut r = cfg.r0;
    let mut t = 0.0f64;
    let mut sup = cfg.r0;
    let mut steps = 0u64;
    let mut drift_caps = 0u64;

    let signed_mode = cfg.pole == PolePolicy::None;
    let wall = match cfg.boundary {
        Boundary::Free => f64::INFINITY,
        Boundary::ReflectAt(w) => w,
    };

    'evolve: while t < cfg.horizon {
        let mut dt_eff = match cfg.step_policy {
            StepPolicy::Fixed => cfg.dt,
            StepPolicy::AdaptiveRadial { floor } => cfg.dt * (r * r).max(floor).min(1.0),
        };
        let mut last_step = false;
        if t + dt_eff >= cfg.horizon {
            dt_eff = cfg.horizon - t;
            last_step = true;
        }
        let z: f64 = rng.sample(StandardNormal);
        let drift = manifold.radial_drift(r);
        let raw_move = drift * dt_eff;
        let cap = 0.5 * r.abs();
        let capped_move = raw_move.clamp(-cap, cap);
        if capped_move != raw_move {
            drift_caps += 1;
        }
        let y = r + capped_move + dt_eff.sqrt() * z;
        if !y.is_finite() {
            return Err(SimError::Integrator {
                path_index,
                step: steps,
                detail: format!("non-finite radius from r = {r}, dt = {dt_eff}"),
            });
        }
        let t_next = if last_step { cfg.horizon } else { t + dt_eff };

        // Passage detection on the raw increment (x, y), drift frozen.
        while next_level < levels.len() {
            let a = levels[next_level].1;
            if r.max(y) >= a {
                let frac = if y != r { ((a - r) / (y - r)).clamp(0.0, 1.0) } else { 1.0 };
                passage_times[next_level] = t + frac * dt_eff;
                next_level += 1;
            } else {
                let q = 2.0 * (a - r) * (a - y) / dt_eff;
                if cfg.bridge_correction && q < 30.0 {
                    let u: f64 = rng.random();
                    if u < (-q).exp() {
                        passage_times[next_level] = t_next;
                        next_level += 1;
                    }
                }
                break;
            }
        }

        let mut r_new = y;
        if !signed_mode {
            // Fold into [0, wall]; a single reflection suffices for sane steps
            // and the loop guards pathological ones.
            let mut guard = 0;
            while !(0.0..=wall).contains(&r_new) {
                if r_new < 0.0 {
                    r_new = -r_new;
                } else {
                    sup = sup.max(wall);
                    r_new = 2.0 * wall - r_new;
                }
                guard += 1;
                if guard > 64 {
                    return Err(SimError::Integrator {
                        path_index,
                        step: steps,
                        detail: format!("reflection failed to settle from y = {y}"),
                    });
                }
            }
        }
        sup = sup.max(r_new);
        r = r_new;
        t = t_next;
        steps += 1;

        while grid_idx < grid.len() && t >= grid[grid_idx] * (1.0 - 1e-12) {
            grid_idx += 1;
            if grid_idx == grid.len() || t < grid[grid_idx] * (1.0 - 1e-12) {
                checkpoints.push(Checkpoint { t, radius: r, running_sup: sup });
            }
        }

        if cfg.stop_after_levels && next_level == levels.len() && !levels.is_empty() {
            break 'evolve;
        }
    }

    if checkpoints.is_empty() {
        checkpoints.push(Checkpoint { t, radius: r, running_sup: sup });
    }

    Ok(PathRecord {
        path_index,
        seed: cfg.seed,
        checkpoints,
        first_level_n: levels.first().map_or(0, |&(n, _)| n),
        passage_times,
        final_time: t,
        final_radius: r,
        running_sup: sup,
        steps,
        drift_caps,
    })
}

/// Consecutive crossing durations (n, tau_n, tau_n - tau_{n-1}) for every n
/// where both passage times are finite.
pub fn crossing_times(
    path: &PathRecord,
    s: &CrossingSchedule,
) -> Result<Vec<(u32, f64, f64)>, SimError> {
    let expected = s.passage_levels();
    if path.passage_times.len() != expected.len()
        || path.first_level_n != expected.first().map_or(0, |&(n, _)| n)
    {
        return Err(SimError::ScheduleMismatch {
            expected_first: expected.first().map_or(0, |&(n, _)| n),
            expected_len: expected.len(),
            got_first: path.first_level_n,
            got_len: path.passage_times.len(),
        });
    }
    let mut out = Vec::new();
    for i in 1..path.passage_times.len() {
        let (prev, cur) = (path.passage_times[i - 1], path.passage_times[i]);
        if prev.is_finite() && cur.is_finite() {
            out.push((path.first_level_n + i as u32, cur, cur - prev));
        }
    }
    Ok(out)
}

/// Run `cfg.paths` independent paths and aggregate. Results are identical for
/// any worker count: each path is a pure function of its index, the collected
/// order is by index, and reductions are fixed-shape pairwise sums.
pub fn run_ensemble(
    manifold: &Manifold,
    cfg: &SimConfig,
    levels: &[(u32, f64)],
) -> Result<PathEnsemble, SimError> {
    cfg.validate(manifold)?;
    let records: Result<Vec<PathRecord>, SimError> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| simulate_radial_path(manifold, cfg, levels, i))
        .collect();
    let records = records?;
    let stats = compute_stats(&records, levels);
    Ok(PathEnsemble {
        config: cfg.clone(),
        model_spec: manifold.spec_string(),
        levels: levels.to_vec(),
        records,
        stats,
    })
}

fn compute_stats(records: &[PathRecord], levels: &[(u32, f64)]) -> EnsembleStats {
    let n = records.len();
    let finals: Vec<f64> = records.iter().map(|r| r.final_radius).collect();
    let sups: Vec<f64> = records.iter().map(|r| r.running_sup).collect();
    let steps: Vec<f64> = records.iter().map(|r| r.steps as f64).collect();
    let finite_passages = levels
        .iter()
        .enumerate()
        .map(|(i, &(level_n, _))| {
            let count = records.iter().filter(|r| r.passage_times[i].is_finite()).count();
            (level_n, count)
        })
        .collect();
    EnsembleStats {
        paths: n,
        mean_final_radius: pairwise_sum(&finals) / n as f64,
        mean_running_sup: pairwise_sum(&sups) / n as f64,
        mean_steps: pairwise_sum(&steps) / n as f64,
        finite_passages,
    }
}

/// Radial samples of the reflecting diffusion in the ball of radius `wall`,
/// taken every `spacing` time units after `burn_in`, pooled over paths in
/// path order. Their law should approach the density proportional to
/// f(r)^(n-1) on [0, wall].
pub fn stationary_sample(
    manifold: &Manifold,
    wall: f64,
    cfg: &SimConfig,
    burn_in: f64,
    spacing: f64,
) -> Result<Vec<f64>, SimError> {
    let mut cfg = cfg.clone();
    cfg.boundary = Boundary::ReflectAt(wall);
    cfg.pole = PolePolicy::Reflect;
    cfg.validate(manifold)?;
    if !(burn_in >= 0.0) || burn_in >= cfg.horizon {
        return Err(SimError::Config(format!(
            "burn-in {burn_in} must be nonnegative and below the horizon {}",
            cfg.horizon
        )));
    }
    if !(spacing > 0.0) {
        return Err(SimError::Config(format!("sample spacing must be positive, got {spacing}")));
    }
    let per_path: Result<Vec<Vec<f64>>, SimError> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| sample_one_path(manifold, &cfg, wall, burn_in, spacing, i))
        .collect();
    Ok(per_path?.into_iter().flatten().collect())
}

fn sample_one_path(
    manifold: &Manifold,
    cfg: &SimConfig,
    wall: f64,
    burn_in: f64,
    spacing: f64,
    path_index: u64,
) -> Result<Vec<f64>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path_index);
    let mut r = cfg.r0;
    let mut t = 0.0f64;
    let mut next_sample = burn_in;
    let mut out = Vec::new();
    let mut steps: u64 = 0;
    while t < cfg.horizon {
        let mut dt_eff = match cfg.step_policy {
            StepPolicy::Fixed => cfg.dt,
            StepPolicy::AdaptiveRadial { floor } => cfg.dt * (r * r).max(floor).min(1.0),
        };
        if t + dt_eff >= cfg.horizon {
            dt_eff = cfg.horizon - t;
            t = cfg.horizon;
        } else {
            t += dt_eff;
        }
        let z: f64 = rng.sample(StandardNormal);
        let drift = manifold.radial_drift(r);
        let cap = 0.5 * r;
        let mut r_new = r + (drift * dt_eff).clamp(-cap, cap) + dt_eff.sqrt() * z;
        if !r_new.is_finite() {
            return Err(SimError::Integrator {
                path_index,
                step: steps,
                detail: format!("non-finite radius from r = {r}"),
            });
        }
        let mut guard = 0;
        while !(0.0..=wall).contains(&r_new) {
            r_new = if r_new < 0.0 { -r_new } else { 2.0 * wall - r_new };
            guard += 1;
            if guard > 64 {
                return Err(SimError::Integrator {
                    path_index,
                    step: steps,
                    detail: format!("reflection failed to settle at wall {wall}"),
                });
            }
        }
        r = r_new;
        steps += 1;
        while t >= next_sample && next_sample <= cfg.horizon {
            out.push(r);
            next_sample += spacing;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Manifold;
    use crate::schedule::build_schedule;
    use crate::models::VolumeGrowth;

    fn line() -> Manifold {
        Manifold::euclidean(1).unwrap()
    }

    fn plane() -> Manifold {
        Manifold::euclidean(2).unwrap()
    }

    #[test]
    fn zero_horizon_records_the_start() {
        let cfg = SimConfig::new(1e-3, 0.0, 1.0, 7, 1);
        let levels = [(1, 2.0), (2, 4.0)];
        let rec = simulate_radial_path(&plane(), &cfg, &levels, 0).unwrap();
        assert_eq!(rec.checkpoints.len(), 1);
        assert_eq!(rec.checkpoints[0].radius, 1.0);
        assert_eq!(rec.final_time, 0.0);
        assert!(rec.passage_times.iter().all(|t| t.is_infinite()));
    }

    #[test]
    fn levels_at_or_below_start_are_crossed_at_time_zero() {
        let cfg = SimConfig::new(1e-3, 0.0, 5.0, 7, 1);
        let levels = [(1, 2.0), (2, 4.0), (3, 8.0)];
        let rec = simulate_radial_path(&plane(), &cfg, &levels, 0).unwrap();
        assert_eq!(rec.passage_times[0], 0.0);
        assert_eq!(rec.passage_times[1], 0.0);
        assert!(rec.passage_times[2].is_infinite());
    }

    #[test]
    fn identical_inputs_reproduce_bitwise() {
        let cfg = SimConfig::new(1e-3, 5.0, 1.0, 42, 1);
        let levels = [(1, 2.0), (2, 4.0)];
        let a = simulate_radial_path(&plane(), &cfg, &levels, 3).unwrap();
        let b = simulate_radial_path(&plane(), &cfg, &levels, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate_radial_path(&plane(), &cfg, &levels, 4).unwrap();
        assert_ne!(a.final_radius, c.final_radius);
    }

    #[test]
    fn running_sup_dominates_checkpoints_and_grows() {
        let cfg = SimConfig::new(1e-3, 20.0, 1.0, 11, 1);
        let rec = simulate_radial_path(&plane(), &cfg, &[], 0).unwrap();
        let mut prev_sup = 0.0;
        for cp in &rec.checkpoints {
            assert!(cp.running_sup >= cp.radius);
            assert!(cp.running_sup >= prev_sup);
            prev_sup = cp.running_sup;
        }
        assert_eq!(rec.running_sup, rec.checkpoints.last().unwrap().running_sup);
        let last = rec.checkpoints.last().unwrap();
        assert_eq!(last.t, 20.0);
    }

    #[test]
    fn passage_times_are_nondecreasing() {
        let cfg = SimConfig::new(1e-3, 100.0, 1.0, 13, 1);
        let levels: Vec<(u32, f64)> = (1..=4).map(|n| (n, (n as f64).exp2())).collect();
        for idx in 0..20 {
            let rec = simulate_radial_path(&plane(), &cfg, &levels, idx).unwrap();
            let finite: Vec<f64> =
                rec.passage_times.iter().copied().take_while(|t| t.is_finite()).collect();
            for w in finite.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn reflection_keeps_radii_inside_the_ball() {
        let mut cfg = SimConfig::new(1e-3, 30.0, 0.5, 5, 1);
        cfg.boundary = Boundary::ReflectAt(1.0);
        let rec = simulate_radial_path(&plane(), &cfg, &[], 0).unwrap();
        for cp in &rec.checkpoints {
            assert!((0.0..=1.0).contains(&cp.radius));
        }
        assert!(rec.running_sup <= 1.0);
    }

    #[test]
    fn signed_mode_requires_dimension_one() {
        let mut cfg = SimConfig::new(1e-3, 1.0, 1.0, 5, 1);
        cfg.pole = PolePolicy::None;
        assert!(matches!(
            simulate_radial_path(&plane(), &cfg, &[], 0),
            Err(SimError::Config(_))
        ));
        assert!(simulate_radial_path(&line(), &cfg, &[], 0).is_ok());
    }

    #[test]
    fn drift_cap_engages_near_the_pole() {
        let dim3 = Manifold::euclidean(3).unwrap();
        let cfg = SimConfig::new(1e-2, 5.0, 1e-4, 99, 1);
        let rec = simulate_radial_path(&dim3, &cfg, &[], 0).unwrap();
        assert!(rec.drift_caps > 0, "expected the drift cap to engage for a start near 0");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let m = plane();
        let bad_dt = SimConfig::new(0.0, 1.0, 1.0, 1, 1);
        assert!(bad_dt.validate(&m).is_err());
        let bad_r0 = SimConfig::new(1e-3, 1.0, 0.0, 1, 1);
        assert!(bad_r0.validate(&m).is_err());
        let mut bad_wall = SimConfig::new(1e-3, 1.0, 2.0, 1, 1);
        bad_wall.boundary = Boundary::ReflectAt(1.0);
        assert!(bad_wall.validate(&m).is_err());
        let no_paths = SimConfig { paths: 0, ..SimConfig::new(1e-3, 1.0, 1.0, 1, 1) };
        assert!(no_paths.validate(&m).is_err());
    }

    #[test]
    fn ensemble_of_one_reduces_to_a_single_path() {
        let cfg = SimConfig::new(1e-3, 3.0, 1.0, 21, 1);
        let levels = [(1, 2.0)];
        let ens = run_ensemble(&plane(), &cfg, &levels).unwrap();
        let lone = simulate_radial_path(&plane(), &cfg, &levels, 0).unwrap();
        assert_eq!(ens.records.len(), 1);
        assert_eq!(ens.records[0], lone);
    }

    #[test]
    fn ensemble_stats_match_recomputation() {
        let cfg = SimConfig::new(1e-2, 10.0, 1.0, 33, 50);
        let levels = [(1, 2.0), (2, 4.0)];
        let ens = run_ensemble(&plane(), &cfg, &levels).unwrap();
        let finals: Vec<f64> = ens.records.iter().map(|r| r.final_radius).collect();
        assert_eq!(ens.stats.mean_final_radius, pairwise_sum(&finals) / finals.len() as f64);
        let count = ens.records.iter().filter(|r| r.passage_times[1].is_finite()).count();
        assert_eq!(ens.stats.finite_passages[1], (2, count));
    }

    #[test]
    fn crossing_times_align_with_schedule_levels() {
        let model = VolumeGrowth::FromManifold(plane());
        let s = build_schedule(&model, 3, 5).unwrap();
        let cfg = SimConfig::new(1e-2, 400.0, 1.0, 8, 1);
        let levels = s.passage_levels();
        let rec = simulate_radial_path(&plane(), &cfg, &levels, 1).unwrap();
        let crossings = crossing_times(&rec, &s).unwrap();
        for (n, tau, dur) in &crossings {
            assert!(*n >= 3 && *n <= 5);
            assert!(*dur > 0.0);
            assert!(tau.is_finite());
        }
        let other = build_schedule(&model, 4, 9).unwrap();
        assert!(matches!(
            crossing_times(&rec, &other),
            Err(SimError::ScheduleMismatch { .. })
        ));
    }

    #[test]
    fn adaptive_steps_shrink_near_the_pole() {
        let mut cfg = SimConfig::new(1e-2, 1.0, 0.05, 3, 1);
        cfg.step_policy = StepPolicy::AdaptiveRadial { floor: 1e-4 };
        let rec = simulate_radial_path(&plane(), &cfg, &[], 0).unwrap();
        let fixed = simulate_radial_path(&plane(), &SimConfig::new(1e-2, 1.0, 0.05, 3, 1), &[], 0)
            .unwrap();
        assert!(rec.steps > fixed.steps, "adaptive run should take more, smaller steps");
    }

    #[test]
    fn early_stop_ends_at_the_top_level() {
        let mut cfg = SimConfig::new(1e-3, 1.0e4, 1.0, 17, 1);
        cfg.stop_after_levels = true;
        let levels = [(1, 2.0), (2, 4.0)];
        let rec = simulate_radial_path(&plane(), &cfg, &levels, 2).unwrap();
        if rec.passage_times[1].is_finite() {
            assert!(rec.final_time < cfg.horizon);
        }
    }

    #[test]
    fn stationary_sampler_draws_from_the_ball() {
        let cfg = SimConfig::new(1e-3, 30.0, 0.5, 44, 4);
        let samples = stationary_sample(&plane(), 1.0, &cfg, 2.0, 0.5).unwrap();
        assert!(!samples.is_empty());
        assert!(samples.iter().all(|r| (0.0..=1.0).contains(r)));
        let again = stationary_sample(&plane(), 1.0, &cfg, 2.0, 0.5).unwrap();
        assert_eq!(samples, again);
    }

    #[test]
    fn stationary_sampler_validates_burn_in() {
        let cfg = SimConfig::new(1e-3, 1.0, 0.5, 44, 1);
        assert!(stationary_sample(&plane(), 1.0, &cfg, 2.0, 0.1).is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_summation() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64) * 0.01).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn checkpoint_grid_is_increasing_and_ends_at_horizon() {
        let cfg = SimConfig::new(1e-3, 100.0, 1.0, 1, 1);
        let grid = checkpoint_grid(&cfg);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert_eq!(*grid.last().unwrap(), 100.0);
        assert!(grid.len() <= cfg.checkpoints);
    }
}
