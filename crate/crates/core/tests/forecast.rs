mod common;

use common::{dominance_spec, intercept, tarch_spec};
use proptest::prelude::*;
use windcast::basis::BasisTerm;
use windcast::forecast::{bootstrap_forecast, point_forecast, ForecastConfig};
use windcast::irwls::FittedModel;
use windcast::synthetic::{Simulation, SyntheticSpec};
use windcast::timeseries::Component;

fn truth(spec: &SyntheticSpec) -> (Simulation, FittedModel) {
    let sim = spec.simulate().unwrap();
    let model = spec.truth_model(&sim).unwrap();
    (sim, model)
}

fn cfg(horizon: usize, n_paths: usize, seed: u64) -> ForecastConfig {
    ForecastConfig {
        horizon,
        n_paths,
        seed,
        ..ForecastConfig::default()
    }
}

#[test]
fn intercept_only_model_follows_its_daily_profile() {
    let mut spec = tarch_spec(1, 600);
    spec.mean = (0..6)
        .flat_map(|m| {
            [
                intercept(m, 1.0 + m as f64),
                intercept(m, 0.7).with_basis(BasisTerm::Diurnal(2)),
                intercept(m, -0.4).with_basis(BasisTerm::Diurnal(5)),
            ]
        })
        .collect();
    let (sim, model) = truth(&spec);
    let f = point_forecast(&model, &sim.states, 300).unwrap();
    let n = sim.states.len();
    for (h, row) in f.iter().enumerate() {
        let b = spec.basis.row(sim.states.time_index(n - 1) + 1 + h as i64);
        for (m, v) in row.iter().enumerate() {
            let want = 1.0 + m as f64 + 0.7 * b.diurnal()[1] - 0.4 * b.diurnal()[4];
            assert!((v - want).abs() < 1e-12, "h {h} m {m}");
        }
    }
    // The profile repeats daily.
    for m in 0..6 {
        assert!((f[0][m] - f[144][m]).abs() < 1e-12);
    }
}

#[test]
fn ar1_forecast_decays_geometrically_to_the_mean() {
    let (sim, model) = truth(&tarch_spec(2, 800));
    let last = *sim.states.row(sim.states.len() - 1);
    let f = point_forecast(&model, &sim.states, 50).unwrap();
    for (h, row) in f.iter().enumerate() {
        for m in 0..6 {
            let want = 0.5 + 0.6f64.powi(h as i32 + 1) * (last[m] - 0.5);
            assert!((row[m] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn point_forecast_matches_noise_free_truth() {
    let spec = dominance_spec(3, 3000);
    let (sim, model) = truth(&spec);
    for cut in [500, 1777, 3000] {
        let history = sim.states.history_through(cut - 1);
        let f = point_forecast(&model, &history, 144).unwrap();
        let g = spec.noise_free_rollout(&history, 144).unwrap();
        for (a, b) in f.iter().zip(&g) {
            for m in 0..6 {
                assert!((a[m] - b[m]).abs() <= 1e-10, "{} vs {}", a[m], b[m]);
            }
        }
    }
}

#[test]
fn zero_residual_pool_collapses_paths_onto_point_forecast() {
    let (sim, mut model) = truth(&tarch_spec(4, 1500));
    model.residuals.iter_mut().for_each(|r| *r = [0.0; 6]);
    let mut c = cfg(36, 120, 5);
    c.keep_paths = true;
    let r = bootstrap_forecast(&model, &sim.states, &c).unwrap();
    for path in r.paths.as_ref().unwrap() {
        assert_eq!(path, &r.point);
    }
    let median = r.median.unwrap();
    let bands = r.bands.unwrap();
    for h in 0..36 {
        for m in 0..6 {
            assert_eq!(median[h][m], r.point[h][m]);
            assert!(bands.state[h].iter().all(|q| q[m] == r.point[h][m]));
        }
    }
}

#[test]
fn bootstrap_is_reproducible_for_a_seed() {
    let (sim, model) = truth(&tarch_spec(5, 1500));
    let a = bootstrap_forecast(&model, &sim.states, &cfg(48, 200, 9)).unwrap();
    let b = bootstrap_forecast(&model, &sim.states, &cfg(48, 200, 9)).unwrap();
    let c = bootstrap_forecast(&model, &sim.states, &cfg(48, 200, 10)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.point, c.point);
    assert_ne!(a.bands, c.bands);
}

#[test]
fn no_paths_gives_point_forecast_only() {
    let (sim, model) = truth(&tarch_spec(6, 1500));
    let r = bootstrap_forecast(&model, &sim.states, &cfg(10, 0, 1)).unwrap();
    assert_eq!(r.point.len(), 10);
    assert!(r.bands.is_none() && r.median.is_none() && r.paths.is_none());
}

#[test]
fn too_few_paths_skip_bands_but_keep_median() {
    let (sim, model) = truth(&tarch_spec(6, 1500));
    let r = bootstrap_forecast(&model, &sim.states, &cfg(10, 20, 1)).unwrap();
    assert!(r.bands.is_none());
    assert!(r.median.is_some());
}

#[test]
fn reconstructed_quantities_stay_in_range() {
    let (sim, model) = truth(&dominance_spec(7, 2000));
    let r = bootstrap_forecast(&model, &sim.states, &cfg(144, 100, 3)).unwrap();
    for x in &r.reconstructed {
        assert!(x.speed >= 0.0 && x.speed_star >= 0.0 && x.pressure_star >= 0.0);
        for d in [x.dir_w, x.dir_p].into_iter().flatten() {
            assert!((0.0..360.0).contains(&d));
        }
    }
    let bands = r.bands.unwrap();
    for h in 0..144 {
        assert!(bands.speed[h].iter().all(|v| *v >= 0.0));
        assert!(bands.speed_star[h].iter().all(|v| *v >= 0.0));
        assert!(bands.pressure_star[h].iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn history_shorter_than_the_lags_is_rejected() {
    let (sim, model) = truth(&dominance_spec(8, 600));
    let short = sim.states.slice(0..1);
    assert!(point_forecast(&model, &short, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bands_are_ordered_and_centered_on_the_median(seed in 0u64..1000) {
        let (sim, model) = truth(&tarch_spec(20 + seed % 3, 1200));
        let r = bootstrap_forecast(&model, &sim.states, &cfg(24, 150, seed)).unwrap();
        let bands = r.bands.unwrap();
        let median = r.median.unwrap();
        let mid = bands.levels.iter().position(|l| *l == 0.5).unwrap();
        for h in 0..24 {
            for m in 0..6 {
                for l in 1..bands.levels.len() {
                    prop_assert!(bands.state[h][l - 1][m] <= bands.state[h][l][m]);
                }
                prop_assert_eq!(bands.state[h][mid][m], median[h][m]);
            }
            for l in 1..bands.levels.len() {
                prop_assert!(bands.speed[h][l - 1] <= bands.speed[h][l]);
            }
        }
        let w = Component::W.index();
        prop_assert!(bands.state[23][0][w] < bands.state[23][bands.levels.len() - 1][w]);
    }
}
