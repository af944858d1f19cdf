//! Iteratively re-weighted LASSO estimation of the mean and
//! standard-deviation models.
//!
//! Starting from unit weights, each iteration
//!
//! 1. fits every mean equation by weighted LASSO,
//! 2. fits every standard-deviation equation by nonnegative LASSO on the
//!    absolute residuals,
//! 3. sets the next weights to the inverse squared fitted standard deviation,
//!
//! and stops once the root-mean-square change of the fitted standard
//! deviations drops below the tolerance.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisConfig, BasisRow};
use crate::design::{
    build_mean_design, build_variance_design, ColumnSpec, EquationDesign, LagConfig, LagLookup,
    MaskMatrix, ResidualLags, StateLags,
};
use crate::error::{Error, Result};
use crate::lasso::{solve_path, LassoFit, LassoOptions, LassoProblem};
use crate::stats;
use crate::timeseries::{empirical_thresholds, Component, StateMatrix, StateVector, ThresholdSet};

/// Estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub lags: LagConfig,
    pub basis: BasisConfig,
    pub mask: MaskMatrix,
    pub lasso: LassoOptions,
    pub max_iterations: usize,
    /// Stop once the RMS change of the fitted standard deviations is below this.
    pub tolerance: f64,
    /// Keep each equation's `lambda / lambda_max` from the first iteration.
    pub freeze_lambda: bool,
    /// Lower bound on fitted standard deviations, as a multiple of the
    /// standard deviation of the absolute residuals.
    pub sigma_floor: f64,
    /// Rescale each fitted standard deviation so the standardized residuals
    /// have unit mean square.
    pub calibrate_sigma: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lags: LagConfig::default(),
            basis: BasisConfig::default(),
            mask: MaskMatrix::standard(),
            lasso: LassoOptions::default(),
            max_iterations: 20,
            tolerance: 1e-3,
            freeze_lambda: false,
            sigma_floor: 1e-6,
            calibrate_sigma: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.lags.validate()?;
        self.basis.validate()?;
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".to_string()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".to_string()));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(Error::Config("sigma_floor must be positive".to_string()));
        }
        if self.lasso.n_lambda == 0 || !(self.lasso.lambda_min_ratio > 0.0 && self.lasso.lambda_min_ratio < 1.0)
        {
            return Err(Error::Config("invalid lambda grid settings".to_string()));
        }
        Ok(())
    }
}

/// One nonzero coefficient together with its column metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Position of the column in the equation's catalog.
    pub column: usize,
    pub spec: ColumnSpec,
    pub coefficient: f64,
}

fn sparse_terms(fit_coefs: &[f64], design: &EquationDesign) -> Vec<Term> {
    fit_coefs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| Term {
            column: j,
            spec: design.catalog.columns[j].clone(),
            coefficient: *c,
        })
        .collect()
}

/// Final estimates of one equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationFit {
    pub component: Component,
    pub mean_terms: Vec<Term>,
    pub variance_terms: Vec<Term>,
    pub mean_columns: usize,
    pub variance_columns: usize,
    pub mean_lambda: f64,
    pub variance_lambda: f64,
    /// Lower bound applied to the fitted standard deviation.
    pub sigma_floor: f64,
    /// Factor applied by the calibration step (1 when disabled).
    pub sigma_scale: f64,
}

impl EquationFit {
    /// Conditional mean given lagged states.
    pub fn mean(&self, lags: &dyn LagLookup, basis: &BasisRow, thresholds: &ThresholdSet) -> f64 {
        self.mean_terms
            .iter()
            .map(|t| t.coefficient * t.spec.value(lags, basis, thresholds))
            .sum()
    }

    /// Conditional standard deviation given lagged residuals.
    pub fn sigma(&self, residual_lags: &dyn LagLookup, basis: &BasisRow) -> f64 {
        let empty = ThresholdSet::empty();
        let s: f64 = self
            .variance_terms
            .iter()
            .map(|t| t.coefficient * t.spec.value(residual_lags, basis, &empty))
            .sum();
        s.max(self.sigma_floor)
    }
}

/// Per-iteration record of the estimation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// RMS change of the fitted standard deviations against the previous
    /// iteration (unit standard deviations before the first).
    pub delta: f64,
    pub mean_lambda: [f64; 6],
    pub variance_lambda: [f64; 6],
    pub mean_df: [usize; 6],
    pub variance_df: [usize; 6],
    /// Sum of the mean-model weights used in this iteration.
    pub weight_sum: [f64; 6],
    /// Sum of the inverse squared standard deviations produced here.
    pub inverse_variance_sum: [f64; 6],
}

/// Output of [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub config: FitConfig,
    pub thresholds: ThresholdSet,
    /// Absolute time index of the first training row.
    pub start_index: i64,
    pub n_rows: usize,
    /// First estimation row; earlier rows only feed lags.
    pub sample_start: usize,
    pub equations: Vec<EquationFit>,
    /// Residuals on the estimation rows.
    pub residuals: Vec<StateVector>,
    /// Fitted standard deviations on the estimation rows.
    pub sigma: Vec<StateVector>,
    /// Mean-model weights used in the final iteration.
    pub weights: Vec<StateVector>,
    pub trace: Vec<IterationTrace>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits the model with thresholds taken as the empirical percentiles of
/// `states`.
pub fn fit(states: &StateMatrix, config: &FitConfig) -> Result<FittedModel> {
    let thresholds = if config.lags.j2.is_empty() || config.lags.alphas.is_empty() {
        ThresholdSet::empty()
    } else {
        empirical_thresholds(states, &config.lags.alphas)?
    };
    fit_with_thresholds(states, config, thresholds)
}

/// Weighted LASSO for one mean equation; the constant is fitted exactly.
pub fn fit_mean_equation(
    design: &EquationDesign,
    weights: Option<&[f64]>,
    options: &LassoOptions,
) -> Result<LassoFit> {
    let mut problem = LassoProblem::new(&design.design.x, &design.response);
    problem.weights = weights;
    problem.intercept = design.catalog.constant_index();
    solve_path(&problem, options)
}

/// Nonnegative LASSO of the absolute residuals; the constant is unpenalized.
pub fn fit_variance_equation(design: &EquationDesign, options: &LassoOptions) -> Result<LassoFit> {
    let mut problem = LassoProblem::new(&design.design.x, &design.response);
    problem.nonnegative = true;
    problem.unpenalized = design.catalog.constant_index().into_iter().collect();
    solve_path(&problem, options)
}

fn fitted_values(design: &EquationDesign, coefs: &[f64]) -> Vec<f64> {
    let x = &design.design.x;
    let mut out = vec![0.0; x.nrows()];
    for (j, &c) in coefs.iter().enumerate() {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(x.column(j).iter()) {
                *o += c * v;
            }
        }
    }
    out
}

fn with_ratio(options: &LassoOptions, ratio: Option<f64>) -> LassoOptions {
    LassoOptions {
        fixed_ratio: ratio.or(options.fixed_ratio),
        ..options.clone()
    }
}

fn ratio_of(fit: &LassoFit) -> Option<f64> {
    (fit.lambda_max > 0.0).then(|| fit.selected_lambda() / fit.lambda_max)
}

fn equation_error(m: usize, e: Error) -> Error {
    match e {
        Error::Degenerate(msg) => Error::Degenerate(format!(
            "equation {} ({}): {msg}",
            m + 1,
            Component::from_index(m)
        )),
        other => other,
    }
}

struct MeanStep {
    coefs: Vec<f64>,
    lambda: f64,
    ratio: Option<f64>,
    df: usize,
    resid: Vec<f64>,
}

struct VarianceStep {
    coefs: Vec<f64>,
    lambda: f64,
    ratio: Option<f64>,
    df: usize,
    sigma: Vec<f64>,
    floor: f64,
    scale: f64,
}

/// Fits the model with the given thresholds.
pub fn fit_with_thresholds(
    states: &StateMatrix,
    config: &FitConfig,
    thresholds: ThresholdSet,
) -> Result<FittedModel> {
    config.validate()?;
    let lags = &config.lags;
    let t_len = states.len();
    let mean_start = lags.max_mean_lag();
    let s = lags.burn_in();
    if t_len < s + 2 {
        return Err(Error::InsufficientData {
            required: s + 2,
            available: t_len,
        });
    }
    if !states.all_finite() {
        return Err(Error::NumericalInput("state matrix"));
    }
    let n = t_len - s;

    let mean_designs: Vec<EquationDesign> = (0..6)
        .into_par_iter()
        .map(|m| build_mean_design(states, &thresholds, &config.basis, lags, &config.mask, m, s))
        .collect::<Result<_>>()?;

    let mut sigma_prev: Vec<StateVector> = vec![[1.0; 6]; n];
    let mut trace = Vec::new();
    let mut mean_ratio: [Option<f64>; 6] = [None; 6];
    let mut var_ratio: [Option<f64>; 6] = [None; 6];
    let mut converged = false;
    let mut last: Option<(Vec<MeanStep>, Vec<VarianceStep>, Vec<EquationDesign>)> = None;
    let mut weights_used: Vec<StateVector> = vec![[1.0; 6]; n];

    for iteration in 1..=config.max_iterations {
        let weights: Vec<Vec<f64>> = (0..6)
            .map(|m| {
                if iteration == 1 {
                    vec![1.0; n]
                } else {
                    sigma_prev.iter().map(|r| 1.0 / (r[m] * r[m])).collect()
                }
            })
            .collect();

        let mean_steps: Vec<MeanStep> = (0..6)
            .into_par_iter()
            .map(|m| {
                let design = &mean_designs[m];
                let opts = with_ratio(&config.lasso, mean_ratio[m]);
                let w = (iteration > 1).then_some(weights[m].as_slice());
                let fit = fit_mean_equation(design, w, &opts).map_err(|e| equation_error(m, e))?;
                let coefs = fit.coefficients();
                let fitted = fitted_values(design, &coefs);
                let resid = design.response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
                Ok(MeanStep {
                    lambda: fit.selected_lambda(),
                    ratio: ratio_of(&fit),
                    df: fit.selected_point().df,
                    coefs,
                    resid,
                })
            })
            .collect::<Result<_>>()?;

        // Residuals aligned with the state rows; rows before the estimation
        // sample are only needed as lags of the standard-deviation model.
        let mut resid_full: Vec<StateVector> = vec![[f64::NAN; 6]; t_len];
        for (m, step) in mean_steps.iter().enumerate() {
            for (r, e) in step.resid.iter().enumerate() {
                resid_full[s + r][m] = *e;
            }
            let terms = sparse_terms(&step.coefs, &mean_designs[m]);
            for t in mean_start..s {
                let brow = config.basis.row(states.time_index(t));
                let lookup = StateLags { rows: states.rows(), t };
                let mu: f64 = terms
                    .iter()
                    .map(|term| term.coefficient * term.spec.value(&lookup, &brow, &thresholds))
                    .sum();
                resid_full[t][m] = states.row(t)[m] - mu;
            }
        }

        let var_designs: Vec<EquationDesign> = (0..6)
            .into_par_iter()
            .map(|m| build_variance_design(&resid_full, states.start_index(), &config.basis, lags, m, s))
            .collect::<Result<_>>()?;

        let var_steps: Vec<VarianceStep> = (0..6)
            .into_par_iter()
            .map(|m| {
                let design = &var_designs[m];
                let opts = with_ratio(&config.lasso, var_ratio[m]);
                let fit = fit_variance_equation(design, &opts).map_err(|e| equation_error(m, e))?;
                let mut coefs = fit.coefficients();
                let raw = fitted_values(design, &coefs);
                let abs_sd = stats::std_dev(&design.response);
                let mut floor = (config.sigma_floor * abs_sd).max(1e-12);
                let mut sigma: Vec<f64> = raw.iter().map(|v| v.max(floor)).collect();
                let mut scale = 1.0;
                if config.calibrate_sigma {
                    let resid = &mean_steps[m].resid;
                    let ms: f64 = resid
                        .iter()
                        .zip(&sigma)
                        .map(|(e, sd)| (e / sd) * (e / sd))
                        .sum::<f64>()
                        / n as f64;
                    let k = ms.sqrt();
                    if k.is_finite() && k > 0.0 {
                        scale = k;
                        sigma.iter_mut().for_each(|v| *v *= k);
                        coefs.iter_mut().for_each(|v| *v *= k);
                        floor *= k;
                    }
                }
                Ok(VarianceStep {
                    lambda: fit.selected_lambda(),
                    ratio: ratio_of(&fit),
                    df: fit.selected_point().df,
                    coefs,
                    sigma,
                    floor,
                    scale,
                })
            })
            .collect::<Result<_>>()?;

        let mut sigma_new: Vec<StateVector> = vec![[0.0; 6]; n];
        for (m, step) in var_steps.iter().enumerate() {
            for (r, v) in step.sigma.iter().enumerate() {
                sigma_new[r][m] = *v;
            }
        }
        let delta = (sigma_new
            .iter()
            .zip(&sigma_prev)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            / (6 * n) as f64)
            .sqrt();

        let mut entry = IterationTrace {
            iteration,
            delta,
            mean_lambda: [0.0; 6],
            variance_lambda: [0.0; 6],
            mean_df: [0; 6],
            variance_df: [0; 6],
            weight_sum: [0.0; 6],
            inverse_variance_sum: [0.0; 6],
        };
        for m in 0..6 {
            entry.mean_lambda[m] = mean_steps[m].lambda;
            entry.variance_lambda[m] = var_steps[m].lambda;
            entry.mean_df[m] = mean_steps[m].df;
            entry.variance_df[m] = var_steps[m].df;
            entry.weight_sum[m] = weights[m].iter().sum();
            entry.inverse_variance_sum[m] = sigma_new.iter().map(|r| 1.0 / (r[m] * r[m])).sum();
            if config.freeze_lambda && iteration == 1 {
                mean_ratio[m] = mean_steps[m].ratio;
                var_ratio[m] = var_steps[m].ratio;
            }
        }
        log::info!("iteration {iteration}: delta {delta:.3e}");
        trace.push(entry);
        for (r, row) in weights_used.iter_mut().enumerate() {
            for m in 0..6 {
                row[m] = weights[m][r];
            }
        }
        sigma_prev = sigma_new;
        last = Some((mean_steps, var_steps, var_designs));
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }

    let (mean_steps, var_steps, var_designs) = last.expect("at least one iteration");
    let mut equations = Vec::with_capacity(6);
    let mut residuals = vec![[0.0; 6]; n];
    for m in 0..6 {
        for (r, e) in mean_steps[m].resid.iter().enumerate() {
            residuals[r][m] = *e;
        }
        equations.push(EquationFit {
            component: Component::from_index(m),
            mean_terms: sparse_terms(&mean_steps[m].coefs, &mean_designs[m]),
            variance_terms: sparse_terms(&var_steps[m].coefs, &var_designs[m]),
            mean_columns: mean_designs[m].catalog.len(),
            variance_columns: var_designs[m].catalog.len(),
            mean_lambda: mean_steps[m].lambda,
            variance_lambda: var_steps[m].lambda,
            sigma_floor: var_steps[m].floor,
            sigma_scale: var_steps[m].scale,
        });
    }
    if !converged {
        log::warn!(
            "estimation stopped after {} iterations without reaching tolerance {}",
            trace.len(),
            config.tolerance
        );
    }
    Ok(FittedModel {
        config: config.clone(),
        thresholds,
        start_index: states.start_index(),
        n_rows: t_len,
        sample_start: s,
        equations,
        residuals,
        sigma: sigma_prev,
        weights: weights_used,
        iterations: trace.len(),
        trace,
        converged,
    })
}

impl FittedModel {
    /// `residuals / sigma` on the estimation rows.
    pub fn standardized_residuals(&self) -> Vec<StateVector> {
        self.residuals
            .iter()
            .zip(&self.sigma)
            .map(|(e, s)| std::array::from_fn(|m| e[m] / s[m]))
            .collect()
    }

    pub fn last_delta(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.delta)
    }

    /// Rows of history needed before a forecast origin.
    pub fn required_history(&self) -> usize {
        self.config.lags.burn_in() + 1
    }

    /// Residuals of the mean model on rows `from..history.len()`, aligned
    /// with the history rows (earlier entries are NaN).
    pub fn residuals_on(&self, history: &StateMatrix, from: usize) -> Result<Vec<StateVector>> {
        let mean_start = self.config.lags.max_mean_lag();
        if from < mean_start || history.len() <= from {
            return Err(Error::InsufficientData {
                required: from.max(mean_start) + 1,
                available: history.len(),
            });
        }
        let mut out = vec![[f64::NAN; 6]; history.len()];
        for (t, row) in out.iter_mut().enumerate().skip(from) {
            let brow = self.config.basis.row(history.time_index(t));
            let lookup = StateLags { rows: history.rows(), t };
            for (m, eq) in self.equations.iter().enumerate() {
                row[m] = history.row(t)[m] - eq.mean(&lookup, &brow, &self.thresholds);
            }
        }
        Ok(out)
    }

    /// Fitted standard deviation of every equation at row `t` given
    /// residuals aligned with the same rows.
    pub fn sigma_at(&self, residuals: &[StateVector], time_index: i64, t: usize) -> StateVector {
        let brow = self.config.basis.row(time_index);
        let lookup = ResidualLags { residuals, t };
        std::array::from_fn(|m| self.equations[m].sigma(&lookup, &brow))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Autocorrelation summary of one equation's standardized residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationDiagnostics {
    pub component: Component,
    pub acf: Vec<f64>,
    pub acf_abs: Vec<f64>,
    /// Half-width `1.96 / sqrt(T)` of the white-noise band.
    pub band: f64,
    pub outside_fraction: f64,
    pub outside_fraction_abs: f64,
}

/// Residual whiteness checks for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub max_lag: usize,
    pub equations: Vec<EquationDiagnostics>,
    /// `corr(eta_p[t], eta_w[t - k])` for `k = 0..=max_lag`.
    pub pressure_speed_cross_correlation: Vec<f64>,
}

pub const DIAGNOSTIC_MAX_LAG: usize = 200;

/// ACF of a standardized residual series against the white-noise band.
pub fn acf_summary(component: Component, eta: &[f64], max_lag: usize) -> EquationDiagnostics {
    let band = 1.96 / (eta.len() as f64).sqrt();
    let abs: Vec<f64> = eta.iter().map(|v| v.abs()).collect();
    let acf = stats::acf(eta, max_lag);
    let acf_abs = stats::acf(&abs, max_lag);
    let frac = |a: &[f64]| {
        if a.is_empty() {
            0.0
        } else {
            a.iter().filter(|v| v.abs() > band).count() as f64 / a.len() as f64
        }
    };
    EquationDiagnostics {
        component,
        outside_fraction: frac(&acf),
        outside_fraction_abs: frac(&acf_abs),
        acf,
        acf_abs,
        band,
    }
}

pub fn residual_diagnostics(model: &FittedModel) -> DiagnosticsReport {
    let eta = model.standardized_residuals();
    let n = eta.len();
    let max_lag = DIAGNOSTIC_MAX_LAG.min(n.saturating_sub(1));
    let columns: Vec<Vec<f64>> = (0..6).map(|m| eta.iter().map(|r| r[m]).collect()).collect();
    let equations = (0..6)
        .map(|m| acf_summary(Component::from_index(m), &columns[m], max_lag))
        .collect();
    DiagnosticsReport {
        max_lag,
        equations,
        pressure_speed_cross_correlation: stats::cross_correlation(
            &columns[Component::P.index()],
            &columns[Component::W.index()],
            max_lag,
        ),
    }
}
