use chrono::{DateTime, FixedOffset};
use proptest::prelude::*;
use windcast::stats::quantile_sorted;
use windcast::timeseries::{
    decompose, direction_deg, empirical_thresholds, interpolate_gaps, regular_timestamps, state_from_polar,
    Component, ObservationFrame, StateMatrix,
};

fn start() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339("2014-03-01T00:00:00+01:00").unwrap()
}

fn frame(dir: Vec<Option<f64>>, speed: Vec<Option<f64>>, pressure: Vec<Option<f64>>) -> ObservationFrame {
    ObservationFrame::new(regular_timestamps(start(), dir.len()), dir, speed, pressure).unwrap()
}

#[test]
fn tegel_upper_quartile_on_matching_sample() {
    // Evenly spread speeds on [0, 6] have their 75% quantile at 4.5.
    let rows: Vec<_> = (0..=600).map(|i| state_from_polar(1000.0, i as f64 / 100.0, 0.0)).collect();
    let th = empirical_thresholds(&StateMatrix::new(0, rows), &[0.75]).unwrap();
    assert!((th.value(0, Component::W.index()) - 4.50).abs() < 1e-12);
}

#[test]
fn mean_speed_from_north() {
    let s = state_from_polar(1000.0, 3.42, 0.0);
    assert!((s[Component::Wc.index()] - 3.42).abs() < 1e-15);
    assert!(s[Component::Ws.index()].abs() < 1e-15);
}

proptest! {
    #[test]
    fn decompose_then_reconstruct(speed in 1e-3f64..40.0, dir in 0.0f64..360.0, p in 900.0f64..1100.0) {
        let f = frame(vec![Some(dir)], vec![Some(speed)], vec![Some(p)]);
        let s = decompose(&f).unwrap();
        let r = s.row(0);
        let w = r[Component::Ws.index()].hypot(r[Component::Wc.index()]);
        prop_assert!((w - speed).abs() <= 1e-9 * speed);
        let pp = r[Component::Ps.index()].hypot(r[Component::Pc.index()]);
        prop_assert!((pp - p).abs() <= 1e-9 * p);
        let d = direction_deg(r[Component::Ws.index()], r[Component::Wc.index()]).unwrap();
        let diff = (d - dir).rem_euclid(360.0);
        prop_assert!(diff.min(360.0 - diff) <= 1e-9 * 360.0);
    }

    #[test]
    fn interpolation_is_idempotent(
        values in prop::collection::vec((0.0f64..360.0, 0.0f64..20.0, 980.0f64..1040.0), 5..40),
        holes in prop::collection::vec(any::<bool>(), 40),
    ) {
        let n = values.len();
        let keep = |i: usize| i == 0 || i == n - 1 || !holes[i];
        let dir = (0..n).map(|i| keep(i).then_some(values[i].0)).collect();
        let speed = (0..n).map(|i| keep(i).then_some(values[i].1)).collect();
        let pressure = (0..n).map(|i| keep(i).then_some(values[i].2)).collect();
        let once = interpolate_gaps(&frame(dir, speed, pressure), 1.0).unwrap();
        let twice = interpolate_gaps(&once, 1.0).unwrap();
        prop_assert!(once.is_complete());
        prop_assert_eq!(once.direction(), twice.direction());
        prop_assert_eq!(once.speed(), twice.speed());
        prop_assert_eq!(once.pressure(), twice.pressure());
    }

    #[test]
    fn thresholds_monotone_in_alpha(
        rows in prop::collection::vec(prop::array::uniform6(-50.0f64..50.0), 2..60),
        mut alphas in prop::collection::btree_set(1u32..99, 1..8),
    ) {
        let alphas: Vec<f64> = std::mem::take(&mut alphas).into_iter().map(|a| a as f64 / 100.0).collect();
        let states = StateMatrix::new(0, rows.clone());
        let th = empirical_thresholds(&states, &alphas).unwrap();
        for m in 0..6 {
            let mut col: Vec<f64> = rows.iter().map(|r| r[m]).collect();
            col.sort_by(f64::total_cmp);
            for (a, alpha) in alphas.iter().enumerate() {
                prop_assert_eq!(th.value(a, m), quantile_sorted(&col, *alpha));
                if a > 0 {
                    prop_assert!(th.value(a, m) >= th.value(a - 1, m));
                }
            }
        }
    }
}
