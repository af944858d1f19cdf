use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use windcast::lasso::{
    solve_at, solve_path, CoordinateDescent, LassoOptions, LassoProblem, SolverMode,
};

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn objective(x: &DMatrix<f64>, y: &[f64], w: &[f64], z: &[f64], lambda: f64) -> f64 {
    let fit = x * DVector::from_column_slice(z);
    let rss: f64 = (0..y.len()).map(|i| w[i] * (y[i] - fit[i]).powi(2)).sum();
    0.5 * rss + lambda * z.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exact minimizer by enumerating sign patterns: for each pattern the
/// problem is an equality-constrained quadratic, and any sign-consistent
/// candidate is feasible, so the best of them is the global optimum.
fn sign_pattern_oracle(x: &DMatrix<f64>, y: &[f64], w: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let p = x.ncols();
    let mut best = (vec![0.0; p], objective(x, y, w, &vec![0.0; p], lambda));
    for code in 1..3usize.pow(p as u32) {
        let mut c = code;
        let pattern: Vec<i8> = (0..p)
            .map(|_| {
                let d = (c % 3) as i8 - 1;
                c /= 3;
                d
            })
            .collect();
        let support: Vec<usize> = (0..p).filter(|&j| pattern[j] != 0).collect();
        if support.is_empty() {
            continue;
        }
        let k = support.len();
        let mut a = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for (r, &j) in support.iter().enumerate() {
            for (c, &l) in support.iter().enumerate() {
                a[(r, c)] = (0..y.len()).map(|i| w[i] * x[(i, j)] * x[(i, l)]).sum();
            }
            b[r] = (0..y.len()).map(|i| w[i] * x[(i, j)] * y[i]).sum::<f64>()
                - lambda * pattern[j] as f64;
        }
        let Some(sol) = a.lu().solve(&b) else { continue };
        let consistent = support
            .iter()
            .enumerate()
            .all(|(r, &j)| sol[r] * pattern[j] as f64 > 0.0);
        if consistent {
            let mut z = vec![0.0; p];
            for (r, &j) in support.iter().enumerate() {
                z[j] = sol[r];
            }
            let f = objective(x, y, w, &z, lambda);
            if f < best.1 {
                best = (z, f);
            }
        }
    }
    best
}

fn tight() -> LassoOptions {
    LassoOptions {
        tol: 1e-24,
        ..LassoOptions::default()
    }
}

#[test]
fn matches_sign_pattern_oracle_at_half_lambda_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = gaussian_matrix(&mut rng, 20, 8);
    let y: Vec<f64> = (0..20)
        .map(|i| 2.0 * x[(i, 0)] - 1.5 * x[(i, 3)] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let w: Vec<f64> = (0..20).map(|_| rng.random_range(0.5..2.0)).collect();
    for mode in [SolverMode::Gram, SolverMode::Naive] {
        let mut problem = LassoProblem::new(&x, &y);
        problem.weights = Some(&w);
        problem.standardize = false;
        let mut cd = CoordinateDescent::new(&problem, mode).unwrap();
        let lmax = cd.lambda_max(1e-24, 100_000);
        let lambda = 0.5 * lmax;
        cd.solve(lambda, 1e-24, 100_000);
        let z = cd.coefficients();
        let (_, f_oracle) = sign_pattern_oracle(&x, &y, &w, lambda);
        let f = objective(&x, &y, &w, &z, lambda);
        assert!(
            ((f - f_oracle) / f_oracle).abs() < 1e-6,
            "{mode:?}: {f} vs {f_oracle}"
        );
        assert!(cd.kkt_violation(lambda) < 1e-8);
    }
}

#[test]
fn lambda_max_gives_all_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = gaussian_matrix(&mut rng, 50, 6);
    let y: Vec<f64> = (0..50).map(|i| x[(i, 1)] + 0.3).collect();
    let mut problem = LassoProblem::new(&x, &y);
    let fit = solve_path(&problem, &LassoOptions::default()).unwrap();
    assert!(fit.path[0].coefficients.is_empty());
    let z = solve_at(&problem, fit.lambda_max * 1.5, &LassoOptions::default()).unwrap();
    assert!(z.iter().all(|v| *v == 0.0));
    // with an intercept only the intercept survives
    let xi = x.clone().insert_column(0, 1.0);
    problem = LassoProblem::new(&xi, &y);
    problem.intercept = Some(0);
    let fit = solve_path(&problem, &LassoOptions::default()).unwrap();
    assert_eq!(fit.path[0].coefficients.len(), 1);
    assert_eq!(fit.path[0].coefficients[0].0, 0);
}

#[test]
fn orthonormal_design_at_zero_penalty_is_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = gaussian_matrix(&mut rng, 30, 5);
    let q = g.qr().q();
    let y: Vec<f64> = (0..30).map(|_| rng.sample(StandardNormal)).collect();
    let mut problem = LassoProblem::new(&q, &y);
    problem.standardize = false;
    let z = solve_at(&problem, 0.0, &tight()).unwrap();
    let ols = q.transpose() * DVector::from_column_slice(&y);
    for j in 0..5 {
        assert!((z[j] - ols[j]).abs() < 1e-10);
    }
}

#[test]
fn single_column_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = gaussian_matrix(&mut rng, 40, 1);
    let y: Vec<f64> = (0..40).map(|i| 0.7 * x[(i, 0)] + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut problem = LassoProblem::new(&x, &y);
    problem.standardize = false;
    let fit = solve_path(&problem, &tight()).unwrap();
    let xy: f64 = (0..40).map(|i| x[(i, 0)] * y[i]).sum();
    let xx: f64 = (0..40).map(|i| x[(i, 0)].powi(2)).sum();
    for pt in &fit.path {
        let expected = windcast::lasso::soft_threshold(xy, pt.lambda) / xx;
        let got = pt.coefficients.first().map_or(0.0, |c| c.1);
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }
}

#[test]
fn nonnegative_fit_has_no_negative_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = gaussian_matrix(&mut rng, 100, 6).map(|v: f64| v.abs());
    let y: Vec<f64> = (0..100).map(|i| x[(i, 0)] - 2.0 * x[(i, 2)] + 3.0).collect();
    let xi = x.insert_column(0, 1.0);
    let mut problem = LassoProblem::new(&xi, &y);
    problem.nonnegative = true;
    problem.unpenalized = vec![0];
    let fit = solve_path(&problem, &LassoOptions::default()).unwrap();
    for pt in &fit.path {
        assert!(pt.coefficients.iter().all(|c| c.1 >= 0.0));
    }
}

#[test]
fn pure_noise_selects_nearly_empty_model() {
    let seeds = 100;
    let mut ok = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x = gaussian_matrix(&mut rng, 200, 3).insert_column(0, 1.0);
        let y: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let mut problem = LassoProblem::new(&x, &y);
        problem.intercept = Some(0);
        let fit = solve_path(&problem, &LassoOptions::default()).unwrap();
        // the intercept is not counted against the noise columns
        let df = fit.selected_point().coefficients.iter().filter(|c| c.0 != 0).count();
        if df <= 2 {
            ok += 1;
        }
    }
    assert!(ok >= 95, "{ok} of {seeds} seeds selected at most two noise columns");
}

#[test]
fn planted_signal_is_selected() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let x = gaussian_matrix(&mut rng, 300, 15);
        let y: Vec<f64> = (0..300)
            .map(|i| 1.0 * x[(i, 7)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = solve_path(&LassoProblem::new(&x, &y), &LassoOptions::default()).unwrap();
        assert!(fit.selected_point().coefficients.iter().any(|c| c.0 == 7));
    }
}

#[test]
fn modes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x = gaussian_matrix(&mut rng, 120, 9).insert_column(0, 1.0);
    let y: Vec<f64> = (0..120)
        .map(|i| 5.0 + x[(i, 2)] - x[(i, 5)] + 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut problem = LassoProblem::new(&x, &y);
    problem.intercept = Some(0);
    let opts = |mode| LassoOptions { mode, tol: 1e-22, ..LassoOptions::default() };
    let a = solve_path(&problem, &opts(SolverMode::Gram)).unwrap();
    let b = solve_path(&problem, &opts(SolverMode::Naive)).unwrap();
    assert_eq!(a.selected, b.selected);
    for (u, v) in a.coefficients().iter().zip(b.coefficients()) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn rejects_bad_input() {
    let x = DMatrix::from_element(5, 2, 1.0);
    let y = vec![1.0, 2.0, f64::NAN, 0.0, 1.0];
    let r = solve_path(&LassoProblem::new(&x, &y), &LassoOptions::default());
    assert!(matches!(r, Err(windcast::Error::NumericalInput(_))));
    let y = vec![1.0; 5];
    let w = vec![0.0; 5];
    let mut p = LassoProblem::new(&x, &y);
    p.weights = Some(&w);
    assert!(matches!(
        solve_path(&p, &LassoOptions::default()),
        Err(windcast::Error::Degenerate(_))
    ));
}
