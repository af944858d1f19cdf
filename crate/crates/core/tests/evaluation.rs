mod common;

use common::tarch_spec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use windcast::baseline::{fit_baseline, BaselineKind};
use windcast::evaluation::{
    diebold_mariano, direction_error, draw_origins, evaluate, maeoa, pit_histogram, pit_value, rmse_mae,
    BaselineForecaster, EvaluationConfig, Forecaster, Loss, ModelForecaster,
};
use windcast::forecast::ForecastConfig;
use windcast::timeseries::Component;
use windcast::ErrorKind;

fn pit_sample(seed: u64, n: usize, ensemble_sd: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ens_dist = Normal::new(0.0, ensemble_sd).unwrap();
    let mut ens = vec![0.0; 99];
    (0..n)
        .map(|_| {
            ens.iter_mut().for_each(|e| *e = ens_dist.sample(&mut rng));
            let y: f64 = StandardNormal.sample(&mut rng);
            pit_value(&ens, y, &mut rng)
        })
        .collect()
}

#[test]
fn calibrated_ensembles_pass_the_uniformity_test() {
    let passes = (0..100)
        .filter(|&s| pit_histogram(&pit_sample(s, 1000, 1.0), 20).unwrap().p_value > 0.01)
        .count();
    assert!(passes >= 95, "{passes} of 100");
}

#[test]
fn underdispersed_ensembles_give_a_u_shape() {
    let h = pit_histogram(&pit_sample(1, 5000, 0.5), 20).unwrap();
    let interior = h.counts[1..19].iter().sum::<usize>() as f64 / 18.0;
    assert!((h.counts[0] + h.counts[19]) as f64 > 2.0 * interior, "{:?}", h.counts);
    assert!(h.p_value < 0.01);
}

#[test]
fn pit_ties_are_split_uniformly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vals: Vec<f64> = (0..2000).map(|_| pit_value(&[1.0; 9], 1.0, &mut rng)).collect();
    assert!(pit_histogram(&vals, 10).unwrap().p_value > 0.001);
}

#[test]
fn dm_statistic_matches_direct_computation() {
    let a: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64).sqrt()).collect();
    let b: Vec<f64> = (0..40).map(|i| ((i * 5 % 13) as f64 * 0.3).cos() + 1.0).collect();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let n = 40.0;
    let m = d.iter().sum::<f64>() / n;
    let g = |k: usize| (k..40).map(|t| (d[t] - m) * (d[t - k] - m)).sum::<f64>() / n;
    let lrv = g(0) + 2.0 * (2.0 / 3.0) * g(1) + 2.0 * (1.0 / 3.0) * g(2);
    let stat = m / (lrv / n).sqrt();
    let r = diebold_mariano(&a, &b, 3).unwrap();
    assert!((r.statistic - stat).abs() < 1e-12);
    assert!(!r.degenerate);
    assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    let flipped = diebold_mariano(&b, &a, 3).unwrap();
    assert!((flipped.statistic + r.statistic).abs() < 1e-12);
    assert!((flipped.p_value - r.p_value).abs() < 1e-12);
}

#[test]
fn dm_needs_thirty_pairs() {
    let e = diebold_mariano(&[1.0; 29], &[2.0; 29], 1).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Data);
}

#[test]
fn persistence_against_itself_is_indistinguishable() {
    let sim = tarch_spec(3, 3000).simulate().unwrap();
    let split = 2000;
    let persistence = fit_baseline(BaselineKind::Persistence, &sim.states.slice(0..split), 0).unwrap();
    let a = BaselineForecaster { name: "a".into(), model: &persistence };
    let b = BaselineForecaster { name: "b".into(), model: &persistence };
    let cfg = EvaluationConfig { n_origins: 100, horizon: 12, ..EvaluationConfig::default() };
    let run = evaluate(&sim.states, split, &[&a, &b], &cfg).unwrap();
    for h in [1, 6, 12] {
        for v in [Some(Component::W), Some(Component::P), None] {
            let r = run.dm("a", "b", v, h, Loss::Squared).unwrap();
            assert_eq!(r.p_value, 1.0);
            assert!(r.degenerate);
        }
    }
    assert!(run.origins.iter().all(|&o| o >= split && o + 12 < sim.states.len()));
    assert!(run.origins.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn requesting_more_origins_than_rows_is_a_config_error() {
    let sim = tarch_spec(4, 600).simulate().unwrap();
    let p = fit_baseline(BaselineKind::Persistence, &sim.states, 0).unwrap();
    let f = BaselineForecaster { name: "p".into(), model: &p };
    let cfg = EvaluationConfig { n_origins: 500, horizon: 10, ..EvaluationConfig::default() };
    let e = evaluate(&sim.states, 300, &[&f], &cfg).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Config);
    assert_eq!(draw_origins(5, 4, 1, 0).unwrap_err().kind(), ErrorKind::Config);
}

#[test]
fn model_forecaster_errors_and_pit_line_up_with_the_data() {
    let spec = tarch_spec(5, 3000);
    let sim = spec.simulate().unwrap();
    let truth = spec.truth_model(&sim).unwrap();
    let f = ModelForecaster {
        name: "truth".into(),
        model: &truth,
        forecast: ForecastConfig { n_paths: 200, seed: 3, ..ForecastConfig::default() },
    };
    let cfg = EvaluationConfig { n_origins: 60, horizon: 6, ..EvaluationConfig::default() };
    let run = evaluate(&sim.states, 2400, &[&f as &dyn Forecaster], &cfg).unwrap();
    let m = run.model("truth").unwrap();
    let pit = m.pit.as_ref().unwrap();
    assert_eq!(pit.len(), 60);
    assert!(pit.iter().flatten().flatten().all(|v| (0.0..=1.0).contains(v)));
    let acc = m.accuracy(Component::W);
    assert_eq!(acc.len(), 6);
    assert!(acc.iter().all(|r| r.n == 60 && r.rmse >= r.mae));
    let dir = tempfile::tempdir().unwrap();
    run.write_outputs(dir.path()).unwrap();
    for file in ["accuracy.csv", "direction.csv", "yaw_loss.csv", "dm.csv", "pit.csv", "summary.json"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

proptest! {
    #[test]
    fn direction_error_is_symmetric_and_periodic(a in -720.0f64..720.0, b in -720.0f64..720.0) {
        let e = direction_error(a, b);
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert!((e - direction_error(b, a)).abs() < 1e-9);
        prop_assert!((e - direction_error(a + 360.0, b)).abs() < 1e-9);
    }

    #[test]
    fn maeoa_is_bounded(pairs in prop::collection::vec((prop::option::of(0.0f64..360.0), prop::option::of(0.0f64..360.0)), 1..50)) {
        let f: Vec<Vec<Option<f64>>> = pairs.iter().map(|p| vec![p.0]).collect();
        let a: Vec<Vec<Option<f64>>> = pairs.iter().map(|p| vec![p.1]).collect();
        let row = maeoa(&f, &a)[0];
        prop_assert_eq!(row.n + row.undefined, pairs.len());
        if row.n > 0 {
            prop_assert!((0.0..=180.0).contains(&row.maeoa));
        }
    }

    #[test]
    fn rmse_dominates_mae(errs in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..40)) {
        for r in rmse_mae(&errs) {
            prop_assert!(r.mae >= 0.0);
            prop_assert!(r.rmse >= r.mae - 1e-9 * r.mae.max(1.0));
        }
    }

    #[test]
    fn pit_values_are_in_unit_interval_and_binned_completely(
        ens in prop::collection::vec(-5.0f64..5.0, 1..30),
        ys in prop::collection::vec(-6.0f64..6.0, 1..60),
        seed in any::<u64>(),
        bins in 1usize..25,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = ys.iter().map(|y| pit_value(&ens, *y, &mut rng)).collect();
        prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        let h = pit_histogram(&vals, bins).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<usize>(), vals.len());
        prop_assert_eq!(h.n, vals.len());
    }
}
