//! Randomized invariants over model parameters and inputs.

use proptest::prelude::*;

use escapelab::models::{TabulatedLaw, VolumeGrowth};
use escapelab::rate::RateFunction;
use escapelab::schedule::build_schedule;
use escapelab::sim::pairwise_sum;
use escapelab::verify::wilson_interval;

fn growth_model() -> impl Strategy<Value = VolumeGrowth> {
    prop_oneof![
        (0.5f64..10.0, 0.1f64..100.0)
            .prop_map(|(d, c)| VolumeGrowth::power(c, d).unwrap()),
        (0.25f64..1.75, 0.1f64..10.0)
            .prop_map(|(a, c)| VolumeGrowth::exp_power(c, a).unwrap()),
        (0.1f64..10.0).prop_map(|c| VolumeGrowth::exp_quad(c).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ball_volumes_never_decrease(model in growth_model(), a in 0.01f64..1e4, step in 1.001f64..100.0) {
        let b = a * step;
        let va = model.log_ball_volume(a).unwrap();
        let vb = model.log_ball_volume(b).unwrap();
        prop_assert!(vb >= va - 1e-12, "volume fell from {va} to {vb} on [{a}, {b}]");
    }

    #[test]
    fn inverting_the_growth_integral_recovers_the_radius(
        model in growth_model(),
        r in 6.5f64..5e4,
    ) {
        let rate = RateFunction::new(model, 6.0).unwrap();
        let t = rate.phi(r).unwrap();
        prop_assert!(t > 0.0);
        let back = rate.psi(t).unwrap();
        prop_assert!(
            ((back - r) / r).abs() < 1e-7,
            "phi({r}) = {t} inverted to {back}"
        );
    }

    #[test]
    fn schedule_deadlines_respect_the_dyadic_cap(
        d in 0.6f64..10.0,
        n_max in 4u32..20,
    ) {
        let model = VolumeGrowth::power(1.0, d).unwrap();
        let s = build_schedule(&model, 3, n_max).unwrap();
        let mut acc = 0.0;
        for e in s.entries() {
            prop_assert!(e.time_increment <= e.gap * e.gap / 32.0 + 1e-12);
            acc += e.time_increment;
            prop_assert!((e.accumulated_time - acc).abs() <= 1e-12 * acc.max(1.0));
        }
        let again = build_schedule(&model, 3, n_max).unwrap();
        prop_assert!(again == s);
    }

    #[test]
    fn deadline_scaling_roundtrips(
        d in 0.6f64..6.0,
        factor in 0.01f64..100.0,
    ) {
        let model = VolumeGrowth::power(1.0, d).unwrap();
        let s = build_schedule(&model, 2, 10).unwrap();
        let back = s
            .scale_time_increments(factor)
            .unwrap()
            .scale_time_increments(1.0 / factor)
            .unwrap();
        for (a, b) in s.entries().iter().zip(back.entries()) {
            prop_assert!((a.time_increment - b.time_increment).abs() <= 1e-12 * a.time_increment);
        }
    }

    #[test]
    fn wilson_intervals_stay_in_the_unit_box(s in 0usize..500, extra in 0usize..500) {
        let t = s + extra;
        let (lo, hi) = wilson_interval(s, t, 1.96);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= hi);
        if t > 0 {
            let p = s as f64 / t as f64;
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }
    }

    #[test]
    fn pairwise_summation_agrees_with_compensated_summation(
        xs in proptest::collection::vec(-1e6f64..1e6, 0..400),
    ) {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in &xs {
            let y = x - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let scale = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&xs) - sum).abs() <= 1e-10 * scale);
    }

    #[test]
    fn interpolated_volumes_stay_monotone_between_knots(
        raw in proptest::collection::vec((0.01f64..10.0, 0.01f64..5.0), 3..12),
        frac in 0.0f64..1.0,
    ) {
        let mut r = 1.0;
        let mut v: f64 = 1.0;
        let mut points = Vec::new();
        for (dr, dv) in raw {
            r += dr;
            v += dv;
            points.push((r, v.ln()));
        }
        let law = VolumeGrowth::Tabulated(TabulatedLaw::from_log_points(&points).unwrap());
        for (r, lv) in &points {
            let got = law.log_ball_volume(*r).unwrap();
            prop_assert!((got - lv).abs() <= 1e-9 * lv.abs().max(1.0));
        }
        let (r_lo, _) = points[0];
        let (r_hi, _) = points[points.len() - 1];
        let a = r_lo + frac * (r_hi - r_lo);
        let b = (a + 0.37 * (r_hi - a)).min(r_hi);
        let va = law.log_ball_volume(a).unwrap();
        let vb = law.log_ball_volume(b).unwrap();
        prop_assert!(vb >= va - 1e-10, "tabulated volume fell from {va} to {vb}");
    }
}
