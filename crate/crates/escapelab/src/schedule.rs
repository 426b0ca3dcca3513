//! The dyadic crossing schedule and its tail bounds.
//!
//! Escape-rate arguments track the diffusion through the spheres of radius
//! R_n = 2^n. Crossing the annulus from R_{n-1} to R_n (width r_n = 2^{n-1})
//! in time at most
//!
//! ```text
//! t_n = (1/32) r_n^2 / (max(ln|B(R_n)|, 1) + max(ln ln R_n, 1))
//! ```
//!
//! is exponentially unlikely, and the failure probability of each crossing is
//! bounded by
//!
//! ```text
//! (|B(R_n)| / |B(2)|) * (C / sqrt(pi t_n)) * (T_n / r_n) * exp(-r_n^2 / (8 t_n)) ,
//! ```
//!
//! whose sum over n converges. T_n is the running sum of the t_k, and it
//! dominates a fixed fraction of the growth integral, which is what connects
//! the schedule to the rate function. Both clamps are applied at every index:
//! they only shrink t_n, so every probability bound derived from the schedule
//! stays valid, and small-volume laws keep a positive denominator.

use crate::models::{ModelError, VolumeGrowth};
use crate::quad::{self, QuadError};

pub const DEFAULT_N_MIN: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("schedule index n = {n} outside the built range [{n_min}, {n_max}]")]
    Index { n: u32, n_min: u32, n_max: u32 },
    #[error("schedule range invalid: n_min = {n_min}, n_max = {n_max} (need 2 <= n_min <= n_max <= 1023)")]
    BadRange { n_min: u32, n_max: u32 },
    #[error("tail-bound constant must be positive, got {c}")]
    BadConstant { c: f64 },
    #[error(
        "accumulated time T_{n} = {accumulated} fell below its integral lower bound {bound}; \
         the schedule and the growth integral disagree"
    )]
    BoundViolated { n: u32, accumulated: f64, bound: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub n: u32,
    /// R_n = 2^n.
    pub radius: f64,
    /// r_n = R_n - R_{n-1} = 2^(n-1).
    pub gap: f64,
    /// Raw ln|B(R_n)|.
    pub log_volume: f64,
    /// max(ln ln R_n, 1).
    pub h: f64,
    /// t_n.
    pub time_increment: f64,
    /// T_n, summed from n_min.
    pub accumulated_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingSchedule {
    model_spec: String,
    n_min: u32,
    /// Raw ln|B| at the base radius 2 (or at the model's domain floor if that
    /// lies above 2), the reference volume of the tail bound.
    log_volume_base: f64,
    entries: Vec<ScheduleEntry>,
}

impl CrossingSchedule {
    pub fn n_min(&self) -> u32 {
        self.n_min
    }

    pub fn n_max(&self) -> u32 {
        self.n_min + self.entries.len() as u32 - 1
    }

    pub fn model_spec(&self) -> &str {
        &self.model_spec
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn entry(&self, n: u32) -> Result<&ScheduleEntry, ScheduleError> {
        if n < self.n_min || n > self.n_max() {
            return Err(ScheduleError::Index { n, n_min: self.n_min, n_max: self.n_max() });
        }
        Ok(&self.entries[(n - self.n_min) as usize])
    }

    /// Sphere radii a simulated path should watch, one per index starting at
    /// n_min - 1 so the first crossing duration has its left endpoint.
    pub fn passage_levels(&self) -> Vec<(u32, f64)> {
        let start = self.n_min - 1;
        (start..=self.n_max()).map(|n| (n, (n as f64).exp2())).collect()
    }

    /// Copy with every deadline t_n multiplied by `factor` and the prefix
    /// sums rebuilt. A zero factor makes every deadline unmeetable and a huge
    /// one makes them all trivial, which brackets sensitivity probes.
    pub fn scale_time_increments(&self, factor: f64) -> Result<CrossingSchedule, ScheduleError> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(ScheduleError::BadConstant { c: factor });
        }
        let mut scaled = self.clone();
        let mut acc = 0.0;
        for e in &mut scaled.entries {
            e.time_increment *= factor;
            acc += e.time_increment;
            e.accumulated_time = acc;
        }
        Ok(scaled)
    }
}

/// Build the schedule for indices n_min..=n_max.
pub fn build_schedule(
    model: &VolumeGrowth,
    n_min: u32,
    n_max: u32,
) -> Result<CrossingSchedule, ScheduleError> {
    if n_min < 2 || n_max < n_min || n_max > 1023 {
        return Err(ScheduleError::BadRange { n_min, n_max });
    }
    let base_radius = 2.0f64.max(model.domain_min());
    let log_volume_base = model.log_ball_volume(base_radius)?;
    let mut entries = Vec::with_capacity((n_max - n_min + 1) as usize);
    let mut accumulated = 0.0;
    for n in n_min..=n_max {
        let radius = (n as f64).exp2();
        let gap = ((n - 1) as f64).exp2();
        let log_volume = model.log_ball_volume(radius)?;
        let h = radius.ln().ln().max(1.0);
        let denom = log_volume.max(1.0) + h;
        let time_increment = gap * gap / (32.0 * denom);
        accumulated += time_increment;
        entries.push(ScheduleEntry {
            n,
            radius,
            gap,
            log_volume,
            h,
            time_increment,
            accumulated_time: accumulated,
        });
    }
    Ok(CrossingSchedule {
        model_spec: model.spec_string(),
        n_min,
        log_volume_base,
        entries,
    })
}

/// Log of the probability bound for a too-fast crossing at index n with
/// constant C. The plain probability is its exponential, which may underflow
/// to zero; the log value is always meaningful.
#[derive(Debug, Clone, Copy)]
pub struct TailBound {
    pub n: u32,
    pub log_bound: f64,
    pub bound: f64,
}

pub fn tail_bound(s: &CrossingSchedule, n: u32, c: f64) -> Result<TailBound, ScheduleError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(ScheduleError::BadConstant { c });
    }
    let entry = s.entry(n)?;
    let log_bound = (entry.log_volume - s.log_volume_base) + c.ln()
        - 0.5 * (std::f64::consts::PI * entry.time_increment).ln()
        + (entry.accumulated_time / entry.gap).ln()
        - entry.gap * entry.gap / (8.0 * entry.time_increment);
    Ok(TailBound { n, log_bound, bound: log_bound.exp() })
}

/// The integral lower bound on the accumulated time,
///
/// ```text
/// (1/256) Integral_{R_{n_min}}^{R_{n+1}} r dr / (max(ln|B|, 1) + max(ln ln r, 1)) ,
/// ```
///
/// checked against T_n before being returned. The clamped denominator matches
/// the one inside t_n, which is what makes the inequality hold for every law.
pub fn accumulated_time_lower_bound(
    model: &VolumeGrowth,
    s: &CrossingSchedule,
    n: u32,
) -> Result<f64, ScheduleError> {
    let entry = s.entry(n)?;
    let a = (s.n_min as f64).exp2();
    let b = ((n + 1) as f64).exp2();
    let integral = clamped_growth_integral(model, a, b)?;
    let bound = integral / 256.0;
    if entry.accumulated_time < bound {
        return Err(ScheduleError::BoundViolated {
            n,
            accumulated: entry.accumulated_time,
            bound,
        });
    }
    Ok(bound)
}

/// Integral of r / (max(ln|B|, 1) + max(ln ln r, 1)) over [a, b], split at the
/// points where either clamp disengages so each quadrature piece is smooth.
fn clamped_growth_integral(model: &VolumeGrowth, a: f64, b: f64) -> Result<f64, ScheduleError> {
    let integrand = |r: f64| -> f64 {
        let lv = match model.log_ball_volume(r) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        r / (lv.max(1.0) + r.ln().ln().max(1.0))
    };
    let mut cuts = vec![a];
    let ee = std::f64::consts::E.exp();
    if a < ee && ee < b {
        cuts.push(ee);
    }
    if let Some(cross) = unit_volume_crossing(model, a, b) {
        cuts.push(cross);
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += quad::integrate_default(integrand, w[0], w[1])?.value;
        }
    }
    Ok(total)
}

/// Radius in (a, b) where ln|B| crosses 1, if the clamp switches inside.
fn unit_volume_crossing(model: &VolumeGrowth, a: f64, b: f64) -> Option<f64> {
    let below = |r: f64| model.log_ball_volume(r).map(|v| v < 1.0).unwrap_or(false);
    if below(a) == below(b) {
        return None;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) == below(a) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_models, Manifold};
    use approx::assert_relative_eq;

    fn euclidean_plane() -> VolumeGrowth {
        VolumeGrowth::FromManifold(Manifold::euclidean(2).unwrap())
    }

    #[test]
    fn radii_and_gaps_are_dyadic() {
        let model = VolumeGrowth::power(1.0, 2.0).unwrap();
        let s = build_schedule(&model, 3, 10).unwrap();
        let e3 = s.entry(3).unwrap();
        assert_eq!(e3.radius, 8.0);
        assert_eq!(e3.gap, 4.0);
        for e in s.entries() {
            assert_eq!(e.radius, (e.n as f64).exp2());
            assert_eq!(e.gap, e.radius / 2.0);
        }
    }

    #[test]
    fn euclidean_plane_first_increment() {
        // ln|B(8)| = ln(64 pi), h(8) = max(ln ln 8, 1) = 1,
        // t_3 = (1/32) * 16 / (ln(64 pi) + 1).
        let s = build_schedule(&euclidean_plane(), 3, 6).unwrap();
        let e3 = s.entry(3).unwrap();
        assert_relative_eq!(e3.log_volume, 5.303612969209072, epsilon = 1e-9);
        assert_relative_eq!(e3.time_increment, 0.07931959059706295, max_relative = 1e-9);
        assert_eq!(e3.h, 1.0);
    }

    #[test]
    fn accumulated_time_is_a_prefix_sum() {
        let s = build_schedule(&euclidean_plane(), 3, 20).unwrap();
        let mut sum = 0.0;
        for e in s.entries() {
            sum += e.time_increment;
            assert_eq!(e.accumulated_time, sum);
        }
    }

    #[test]
    fn schedule_algebra_invariants_hold_for_builtins() {
        for model in builtin_models() {
            let s = build_schedule(&model, 3, 30).unwrap();
            for e in s.entries() {
                assert!(
                    e.time_increment <= e.gap * e.gap / 32.0 + 1e-12,
                    "t_n too large for {} at n = {}",
                    model.spec_string(),
                    e.n
                );
                assert!(
                    32.0 * e.accumulated_time <= e.radius * e.gap * (1.0 + 1e-12),
                    "32 T_n exceeded R_n r_n for {} at n = {}",
                    model.spec_string(),
                    e.n
                );
            }
        }
    }

    #[test]
    fn schedules_are_deterministic() {
        let model = VolumeGrowth::FromManifold(Manifold::hyperbolic(3, 1.0).unwrap());
        let a = build_schedule(&model, 3, 25).unwrap();
        let b = build_schedule(&model, 3, 25).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tail_bound_matches_independent_arithmetic() {
        // Assembled by hand: ln 16 - 0.5 ln(pi t_3) + ln(T_3 / 4) - 4 (ln(64 pi) + 1).
        let s = build_schedule(&euclidean_plane(), 3, 6).unwrap();
        let tb = tail_bound(&s, 3, 1.0).unwrap();
        assert_relative_eq!(tb.log_bound, -25.667657527017372, max_relative = 1e-9);
        assert_relative_eq!(tb.bound, tb.log_bound.exp(), epsilon = 0.0);
    }

    #[test]
    fn tail_bound_exponent_equals_minus_four_denominators() {
        // r_n^2 / (8 t_n) = 4 (max(ln|B|,1) + h) by construction.
        let s = build_schedule(&euclidean_plane(), 3, 8).unwrap();
        for e in s.entries() {
            let exponent = e.gap * e.gap / (8.0 * e.time_increment);
            assert_relative_eq!(
                exponent,
                4.0 * (e.log_volume.max(1.0) + e.h),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn tail_bound_decays_geometrically_for_power_volumes() {
        let model = VolumeGrowth::power(1.0, 2.0).unwrap();
        let s = build_schedule(&model, 3, 25).unwrap();
        let mut prev = tail_bound(&s, 5, 1.0).unwrap().log_bound;
        for n in 6..=25 {
            let cur = tail_bound(&s, n, 1.0).unwrap().log_bound;
            assert!(cur <= prev - 1.0, "log bound not decaying at n = {n}: {cur} vs {prev}");
            prev = cur;
        }
    }

    #[test]
    fn tail_bound_index_and_constant_errors() {
        let s = build_schedule(&euclidean_plane(), 3, 6).unwrap();
        assert!(matches!(tail_bound(&s, 2, 1.0), Err(ScheduleError::Index { .. })));
        assert!(matches!(tail_bound(&s, 7, 1.0), Err(ScheduleError::Index { .. })));
        assert!(matches!(tail_bound(&s, 4, 0.0), Err(ScheduleError::BadConstant { .. })));
    }

    #[test]
    fn h_sequence_terms_are_summable() {
        // Sum over n of exp(-2 max(ln ln 2^n, 1)) behaves like sum 1/(n ln 2)^2:
        // terms decrease and partial sums settle.
        let mut terms = Vec::new();
        for n in 3..400u32 {
            let h = ((n as f64).exp2()).ln().ln().max(1.0);
            terms.push((-2.0 * h).exp());
        }
        for w in terms[1..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let total: f64 = terms.iter().sum();
        assert!(total < 2.0, "partial sums unexpectedly large: {total}");
    }

    #[test]
    fn accumulated_time_dominates_integral_bound() {
        let model = euclidean_plane();
        let s = build_schedule(&model, 2, 20).unwrap();
        for n in 2..=20 {
            let bound = accumulated_time_lower_bound(&model, &s, n).unwrap();
            let t = s.entry(n).unwrap().accumulated_time;
            assert!(t >= bound);
        }
    }

    #[test]
    fn accumulated_time_ratio_stays_moderate_for_power_volumes() {
        for d in [2.0, 3.0, 10.0] {
            let model = VolumeGrowth::power(1.0, d).unwrap();
            let s = build_schedule(&model, 3, 24).unwrap();
            for n in [16, 20, 24] {
                let bound = accumulated_time_lower_bound(&model, &s, n).unwrap();
                let ratio = s.entry(n).unwrap().accumulated_time / bound;
                assert!(
                    (1.0..=4.0).contains(&ratio),
                    "D = {d}, n = {n}: T_n / bound = {ratio} outside [1, 4]"
                );
            }
        }
    }

    #[test]
    fn bound_holds_across_builtin_models() {
        for model in builtin_models() {
            let s = build_schedule(&model, 3, 30).unwrap();
            accumulated_time_lower_bound(&model, &s, 30).unwrap_or_else(|e| {
                panic!("{} violated the bound: {e}", model.spec_string())
            });
        }
    }

    #[test]
    fn passage_levels_start_one_index_early() {
        let s = build_schedule(&euclidean_plane(), 3, 5).unwrap();
        assert_eq!(s.passage_levels(), vec![(2, 4.0), (3, 8.0), (4, 16.0), (5, 32.0)]);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let model = VolumeGrowth::power(1.0, 2.0).unwrap();
        assert!(matches!(build_schedule(&model, 1, 5), Err(ScheduleError::BadRange { .. })));
        assert!(matches!(build_schedule(&model, 5, 4), Err(ScheduleError::BadRange { .. })));
    }
}
