mod common;

use common::{small_fit, sparse_spec, tarch_spec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use windcast::design::{build_mean_design, Family};
use windcast::irwls::{acf_summary, fit, fit_mean_equation, residual_diagnostics, FittedModel};
use windcast::timeseries::Component;

#[test]
fn homoscedastic_data_stops_after_two_iterations() {
    for seed in [1, 2, 3] {
        let sim = sparse_spec(seed, 5000, 0.5).simulate().unwrap();
        let model = fit(&sim.states, &small_fit(vec![1, 2, 3], vec![1])).unwrap();
        assert!(model.converged);
        assert_eq!(model.iterations, 2, "seed {seed}: deltas {:?}", model.trace.iter().map(|t| t.delta).collect::<Vec<_>>());
        assert!(model.last_delta() < 1e-3);
    }
}

#[test]
fn constant_weights_reproduce_unweighted_lasso() {
    let sim = sparse_spec(4, 3000, 0.7).simulate().unwrap();
    let mut cfg = small_fit(vec![1, 2, 3], vec![]);
    cfg.basis.variance_periodic_intercept = false;
    let model = fit(&sim.states, &cfg).unwrap();
    for eq in 0..6 {
        let w0 = model.weights[0][eq];
        assert!(model.weights.iter().all(|w| (w[eq] - w0).abs() <= 1e-12 * w0));
        let design = build_mean_design(
            &sim.states,
            &model.thresholds,
            &cfg.basis,
            &cfg.lags,
            &cfg.mask,
            eq,
            model.sample_start,
        )
        .unwrap();
        let plain = fit_mean_equation(&design, None, &cfg.lasso).unwrap();
        let dense = plain.coefficients();
        let ours = &model.equations[eq].mean_terms;
        assert_eq!(ours.len(), dense.iter().filter(|v| **v != 0.0).count());
        for t in ours {
            let d = dense[t.column];
            assert!((t.coefficient - d).abs() <= 1e-6 * d.abs().max(1.0), "eq {eq} col {}", t.column);
        }
    }
}

fn has_term(model: &FittedModel, eq: usize, family: Family) -> bool {
    model.equations[eq]
        .variance_terms
        .iter()
        .any(|t| t.spec.family == family && t.spec.lag == Some(1) && t.coefficient > 0.0)
}

#[test]
fn planted_positive_shock_effect_is_recovered() {
    let w = Component::W.index();
    let hits = (0..100u64)
        .filter(|&seed| {
            let sim = tarch_spec(1000 + seed, 2000).simulate().unwrap();
            let model = fit(&sim.states, &small_fit(vec![1], vec![1])).unwrap();
            has_term(&model, w, Family::ArchPos)
        })
        .count();
    assert!(hits >= 90, "recovered in {hits} of 100 seeds");
}

#[test]
fn weights_audit_floor_and_nonnegativity() {
    let sim = tarch_spec(5, 4000).simulate().unwrap();
    let model = fit(&sim.states, &small_fit(vec![1, 2], vec![1, 2])).unwrap();
    let n = model.residuals.len() as f64;
    assert!(model.trace.len() >= 2);
    for m in 0..6 {
        assert_eq!(model.trace[0].weight_sum[m], n);
        for k in 1..model.trace.len() {
            assert_eq!(model.trace[k].weight_sum[m], model.trace[k - 1].inverse_variance_sum[m]);
        }
        let used: f64 = model.weights.iter().map(|w| w[m]).sum();
        assert_eq!(used, model.trace.last().unwrap().weight_sum[m]);

        let eq = &model.equations[m];
        assert!(eq.sigma_floor > 0.0);
        assert!(eq.variance_terms.iter().all(|t| t.coefficient >= 0.0));
        assert!(model.sigma.iter().all(|s| s[m] >= eq.sigma_floor));
    }
}

#[test]
fn refit_with_final_weights_is_a_fixed_point() {
    let sim = tarch_spec(6, 4000).simulate().unwrap();
    let cfg = small_fit(vec![1, 2], vec![1]);
    let model = fit(&sim.states, &cfg).unwrap();
    for eq in 0..6 {
        let design = build_mean_design(&sim.states, &model.thresholds, &cfg.basis, &cfg.lags, &cfg.mask, eq, model.sample_start)
            .unwrap();
        let w: Vec<f64> = model.weights.iter().map(|r| r[eq]).collect();
        let weights = (model.iterations > 1).then_some(w.as_slice());
        let refit = fit_mean_equation(&design, weights, &cfg.lasso).unwrap();
        let dense = refit.coefficients();
        for t in &model.equations[eq].mean_terms {
            assert!((t.coefficient - dense[t.column]).abs() <= 1e-6 * t.coefficient.abs().max(1.0));
        }
        assert_eq!(model.equations[eq].mean_terms.len(), dense.iter().filter(|v| **v != 0.0).count());
    }
}

#[test]
fn json_round_trip_is_exact() {
    let sim = tarch_spec(7, 2500).simulate().unwrap();
    let model = fit(&sim.states, &small_fit(vec![1, 2], vec![1])).unwrap();
    let text = model.to_json().unwrap();
    let back = FittedModel::from_json(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn white_noise_acf_band_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eta: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let d = acf_summary(Component::W, &eta, 200);
    assert!(d.outside_fraction < 0.1, "{}", d.outside_fraction);
    assert!(d.outside_fraction_abs < 0.1, "{}", d.outside_fraction_abs);
}

#[test]
fn own_simulation_leaves_no_volatility_structure() {
    let sim = tarch_spec(8, 20_000).simulate().unwrap();
    let model = fit(&sim.states, &small_fit(vec![1], vec![1])).unwrap();
    let report = residual_diagnostics(&model);
    for e in &report.equations {
        assert!(e.outside_fraction_abs <= 0.07, "{}: {}", e.component, e.outside_fraction_abs);
    }
    // Unit standard deviations on the same residuals leave clear structure.
    let raw: Vec<f64> = model.residuals.iter().map(|r| r[Component::W.index()]).collect();
    let unscaled = acf_summary(Component::W, &raw, 200);
    assert!(unscaled.outside_fraction_abs > 0.2, "{}", unscaled.outside_fraction_abs);
}
