mod common;

use common::{constant_sigma, diurnal_only, tarch_spec};
use windcast::baseline::{baseline_forecast, fit_baseline, fit_yule_walker, BaselineKind};
use windcast::design::MaskMatrix;
use windcast::synthetic::{SyntheticSpec, TruthTerm};
use windcast::timeseries::StateMatrix;

fn ar_spec(seed: u64, t: usize, phi: &[f64]) -> SyntheticSpec {
    SyntheticSpec {
        t,
        seed,
        basis: diurnal_only(),
        mean: (0..6)
            .flat_map(|m| phi.iter().enumerate().map(move |(l, c)| TruthTerm::ar(m, m, l + 1, *c)))
            .collect(),
        variance: constant_sigma(1.0),
        ..SyntheticSpec::default()
    }
}

/// Univariate Yule-Walker: biased autocovariances of the demeaned series and
/// a Gaussian-elimination solve of the Toeplitz system.
fn yule_walker_1d(x: &[f64], p: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let gamma: Vec<f64> = (0..=p)
        .map(|k| x.iter().zip(&x[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / n)
        .collect();
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| gamma[i.abs_diff(j)]).collect();
            row.push(gamma[i + 1]);
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

#[test]
fn recovers_ar2_coefficients() {
    let sim = ar_spec(1, 10_000, &[0.5, 0.3]).simulate().unwrap();
    let model = fit_baseline(BaselineKind::Ar, &sim.states, 10).unwrap();
    for m in 0..6 {
        assert!(model.orders[m] >= 2, "order {}", model.orders[m]);
        assert!((model.coefficients[0][m][m] - 0.5).abs() < 0.05);
        assert!((model.coefficients[1][m][m] - 0.3).abs() < 0.05);
        for lag in 2..model.orders[m] {
            assert!(model.coefficients[lag][m][m].abs() < 0.05);
        }
    }
    assert!(model.is_stable());
}

#[test]
fn white_noise_gives_negligible_coefficients() {
    let sim = ar_spec(2, 5_000, &[]).simulate().unwrap();
    for kind in [BaselineKind::Ar, BaselineKind::Var] {
        let model = fit_baseline(kind, &sim.states, 5).unwrap();
        for lag in &model.coefficients {
            assert!(lag.iter().flatten().all(|c| c.abs() < 0.08), "{kind:?}");
        }
    }
}

#[test]
fn diagonal_mask_matches_univariate_yule_walker() {
    let sim = tarch_spec(3, 4_000).simulate().unwrap();
    for p in [1, 3, 7] {
        let model = fit_yule_walker(&sim.states, p, &MaskMatrix::diagonal()).unwrap();
        for m in 0..6 {
            let oracle = yule_walker_1d(&sim.states.column(windcast::timeseries::Component::from_index(m)), p);
            for (l, c) in oracle.iter().enumerate() {
                assert!((model.coefficients[l][m][m] - c).abs() < 1e-9, "p {p} m {m} lag {l}");
                for s in (0..6).filter(|s| *s != m) {
                    assert_eq!(model.coefficients[l][m][s], 0.0);
                }
            }
        }
    }
}

#[test]
fn diagonal_var_forecasts_match_per_equation_ar() {
    let sim = ar_spec(4, 3_000, &[0.4, 0.2]).simulate().unwrap();
    let var = fit_yule_walker(&sim.states, 2, &MaskMatrix::diagonal()).unwrap();
    let f = baseline_forecast(&var, &sim.states, 20).unwrap();
    let n = sim.states.len();
    for m in 0..6 {
        let x = sim.states.column(windcast::timeseries::Component::from_index(m));
        let phi = yule_walker_1d(&x, 2);
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut hist = vec![x[n - 2] - mean, x[n - 1] - mean];
        for row in &f {
            let next = phi[0] * hist[hist.len() - 1] + phi[1] * hist[hist.len() - 2];
            hist.push(next);
            assert!((row[m] - (next + mean)).abs() < 1e-9);
        }
    }
}

#[test]
fn forecasts_revert_to_the_sample_mean() {
    let sim = tarch_spec(5, 4_000).simulate().unwrap();
    for kind in [BaselineKind::Ar, BaselineKind::Var] {
        let model = fit_baseline(kind, &sim.states, 4).unwrap();
        let f = baseline_forecast(&model, &sim.states, 500).unwrap();
        for m in 0..6 {
            assert!((f[499][m] - model.means[m]).abs() < 1e-6, "{kind:?} m {m}");
        }
    }
}

#[test]
fn persistence_repeats_the_last_state() {
    let sim = tarch_spec(6, 500).simulate().unwrap();
    let model = fit_baseline(BaselineKind::Persistence, &sim.states, 0).unwrap();
    let f = baseline_forecast(&model, &sim.states, 30).unwrap();
    assert!(f.iter().all(|r| r == sim.states.row(sim.states.len() - 1)));
}

#[test]
fn aic_table_covers_every_candidate_order() {
    let sim = ar_spec(7, 3_000, &[0.6]).simulate().unwrap();
    let model = fit_baseline(BaselineKind::Var, &sim.states, 5).unwrap();
    assert_eq!(model.aic.iter().map(Vec::len).sum::<usize>(), 6);
    let best = model.aic[0]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(best, model.order());
}

#[test]
fn short_series_are_rejected() {
    let states = StateMatrix::new(0, vec![[1.0; 6]; 8]);
    assert!(fit_baseline(BaselineKind::Var, &states, 5).is_err());
}
