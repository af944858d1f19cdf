//! Out-of-sample accuracy protocol: random origins, RMSE/MAE per horizon,
//! circular direction error, Diebold-Mariano comparisons, PIT histograms and
//! the yaw power-loss curve.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::baseline::{baseline_forecast, BaselineModel};
use crate::error::{Error, Result};
use crate::forecast::{bootstrap_forecast, ForecastConfig};
use crate::irwls::{FitConfig, FittedModel};
use crate::timeseries::{direction_deg, Component, StateMatrix, StateVector};

pub const DEFAULT_ORIGINS: usize = 1000;
pub const DEFAULT_PIT_BINS: usize = 20;
pub const MIN_DM_LENGTH: usize = 30;
/// Direction error marking high power loss.
pub const YAW_REFERENCE_DEG: f64 = 30.0;

/// Draws `n` distinct origins from `first..=last`, returned in increasing order.
pub fn draw_origins(first: usize, last: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if last < first {
        return Err(Error::Config(format!(
            "no admissible forecast origins (range {first}..={last} is empty)"
        )));
    }
    let available = last - first + 1;
    if n > available {
        return Err(Error::Config(format!(
            "{n} origins requested but only {available} are available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = sample(&mut rng, available, n).into_iter().map(|i| first + i).collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub horizon: usize,
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

/// RMSE and MAE at every horizon. `errors[i][h]` is the error at origin `i`
/// and horizon `h + 1`; non-finite entries are skipped.
pub fn rmse_mae(errors: &[Vec<f64>]) -> Vec<AccuracyRow> {
    let h_len = errors.iter().map(Vec::len).max().unwrap_or(0);
    (0..h_len)
        .map(|h| {
            let (mut ss, mut sa, mut n) = (0.0, 0.0, 0usize);
            for e in errors.iter().filter_map(|row| row.get(h)).filter(|e| e.is_finite()) {
                ss += e * e;
                sa += e.abs();
                n += 1;
            }
            let d = n.max(1) as f64;
            AccuracyRow {
                horizon: h + 1,
                rmse: (ss / d).sqrt(),
                mae: sa / d,
                n,
            }
        })
        .collect()
}

/// Smallest angle between two directions, in `[0, 180]`.
pub fn direction_error(forecast_deg: f64, actual_deg: f64) -> f64 {
    let d = (forecast_deg - actual_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionRow {
    pub horizon: usize,
    /// Mean absolute angular error over origins where both directions exist.
    pub maeoa: f64,
    pub n: usize,
    pub undefined: usize,
}

/// MAEoA per horizon. `None` marks an undefined direction (zero wind vector)
/// on either side; such pairs are excluded and counted.
pub fn maeoa(forecast: &[Vec<Option<f64>>], actual: &[Vec<Option<f64>>]) -> Vec<DirectionRow> {
    let h_len = forecast.iter().map(Vec::len).max().unwrap_or(0);
    (0..h_len)
        .map(|h| {
            let (mut sum, mut n, mut undefined) = (0.0, 0usize, 0usize);
            for (f, a) in forecast.iter().zip(actual) {
                match (f.get(h).copied().flatten(), a.get(h).copied().flatten()) {
                    (Some(f), Some(a)) => {
                        sum += direction_error(f, a);
                        n += 1;
                    }
                    _ => undefined += 1,
                }
            }
            DirectionRow {
                horizon: h + 1,
                maeoa: if n > 0 { sum / n as f64 } else { f64::NAN },
                n,
                undefined,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Positive when model A has the larger loss.
    pub statistic: f64,
    /// Two-sided p-value against the standard normal.
    pub p_value: f64,
    pub mean_differential: f64,
    /// The loss differential has zero long-run variance.
    pub degenerate: bool,
    pub n: usize,
}

/// Diebold-Mariano test of equal accuracy for horizon `h`, with a
/// Bartlett-kernel long-run variance over `h - 1` lags.
pub fn diebold_mariano(loss_a: &[f64], loss_b: &[f64], h: usize) -> Result<DmResult> {
    if loss_a.len() != loss_b.len() {
        return Err(Error::Config("loss series differ in length".to_string()));
    }
    let n = loss_a.len();
    if n < MIN_DM_LENGTH {
        return Err(Error::InsufficientData {
            required: MIN_DM_LENGTH,
            available: n,
        });
    }
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInput("loss differential"));
    }
    let nf = n as f64;
    let dbar = d.iter().sum::<f64>() / nf;
    let gamma = |k: usize| (k..n).map(|t| (d[t] - dbar) * (d[t - k] - dbar)).sum::<f64>() / nf;
    let bandwidth = h.max(1);
    let mut lrv = gamma(0);
    for k in 1..bandwidth.min(n) {
        lrv += 2.0 * (1.0 - k as f64 / bandwidth as f64) * gamma(k);
    }
    let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if !(lrv > 1e-24 * scale * scale) {
        let (statistic, p_value) = if dbar.abs() <= 1e-15 * scale {
            (0.0, 1.0)
        } else {
            (dbar.signum() * f64::INFINITY, 0.0)
        };
        return Ok(DmResult {
            statistic,
            p_value,
            mean_differential: dbar,
            degenerate: true,
            n,
        });
    }
    let statistic = dbar / (lrv / nf).sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * normal.sf(statistic.abs())).min(1.0);
    Ok(DmResult {
        statistic,
        p_value,
        mean_differential: dbar,
        degenerate: false,
        n,
    })
}

/// Randomized PIT of `realization` within `ensemble`: the rank among the
/// ensemble, with ties split by a uniform draw.
pub fn pit_value<R: Rng + ?Sized>(ensemble: &[f64], realization: f64, rng: &mut R) -> f64 {
    let below = ensemble.iter().filter(|&&v| v < realization).count();
    let ties = ensemble.iter().filter(|&&v| v == realization).count();
    let u: f64 = rng.random();
    (below as f64 + u * (ties + 1) as f64) / (ensemble.len() + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitHistogram {
    pub counts: Vec<usize>,
    pub n: usize,
    /// Largest `|count / n - 1 / bins|`.
    pub max_deviation: f64,
    pub chi_square: f64,
    /// Uniformity p-value from the chi-square statistic.
    pub p_value: f64,
}

pub fn pit_histogram(values: &[f64], bins: usize) -> Result<PitHistogram> {
    if bins == 0 {
        return Err(Error::Config("PIT histogram needs at least one bin".to_string()));
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NumericalInput("PIT value outside [0, 1]"));
        }
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = values.len();
    let expected = n as f64 / bins as f64;
    let max_deviation = counts
        .iter()
        .map(|&c| (c as f64 / n.max(1) as f64 - 1.0 / bins as f64).abs())
        .fold(0.0, f64::max);
    let (chi_square, p_value) = if bins < 2 || n == 0 {
        (0.0, 1.0)
    } else {
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let dist = ChiSquared::new((bins - 1) as f64).expect("positive degrees of freedom");
        (stat, dist.sf(stat))
    };
    Ok(PitHistogram {
        counts,
        n,
        max_deviation,
        chi_square,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YawLoss {
    pub error_deg: f64,
    /// `cos^3` of the error, negative beyond 90 degrees.
    pub raw: f64,
    /// Retained power fraction, `raw` floored at zero.
    pub power: f64,
    pub floored: bool,
}

pub fn yaw_loss(error_deg: f64) -> YawLoss {
    let raw = error_deg.to_radians().cos().powi(3);
    YawLoss {
        error_deg,
        raw,
        power: raw.max(0.0),
        floored: raw < 0.0,
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub n_origins: usize,
    pub horizon: usize,
    pub seed: u64,
    pub pit_bins: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            n_origins: DEFAULT_ORIGINS,
            horizon: crate::forecast::DEFAULT_HORIZON,
            seed: 1,
            pit_bins: DEFAULT_PIT_BINS,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_origins == 0 || self.horizon == 0 || self.pit_bins == 0 {
            return Err(Error::Config(
                "evaluation needs positive n_origins, horizon and pit_bins".to_string(),
            ));
        }
        Ok(())
    }
}

/// Forecasts produced at one origin.
pub struct OriginForecast {
    pub point: Vec<StateVector>,
    pub paths: Option<Vec<Vec<StateVector>>>,
}

/// Anything that can be evaluated at a list of origins.
pub trait Forecaster: Sync {
    fn name(&self) -> &str;
    /// Rows of history needed up to and including the origin.
    fn required_history(&self) -> usize;
    /// Forecasts rows `origin + 1 ..= origin + horizon` of `states` using
    /// only rows up to `origin`.
    fn forecast(&self, states: &StateMatrix, origin: usize, horizon: usize) -> Result<OriginForecast>;
}

fn window(states: &StateMatrix, origin: usize, need: usize) -> StateMatrix {
    states.slice(origin + 1 - need.min(origin + 1)..origin + 1)
}

/// The fitted model with its bootstrap settings. Each origin gets its own
/// bootstrap seed derived from the configured one.
pub struct ModelForecaster<'a> {
    pub name: String,
    pub model: &'a FittedModel,
    pub forecast: ForecastConfig,
}

fn model_forecast(model: &FittedModel, cfg: &ForecastConfig, history: &StateMatrix, origin: usize, horizon: usize) -> Result<OriginForecast> {
    let mut cfg = cfg.clone();
    cfg.horizon = horizon;
    cfg.keep_paths = cfg.n_paths > 0;
    cfg.seed = origin_seed(cfg.seed, origin);
    let r = bootstrap_forecast(model, history, &cfg)?;
    Ok(OriginForecast {
        point: r.point,
        paths: r.paths,
    })
}

impl Forecaster for ModelForecaster<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn required_history(&self) -> usize {
        self.model.required_history()
    }

    fn forecast(&self, states: &StateMatrix, origin: usize, horizon: usize) -> Result<OriginForecast> {
        let history = window(states, origin, self.required_history());
        model_forecast(self.model, &self.forecast, &history, origin, horizon)
    }
}

/// Re-estimates the model on all rows up to each origin before forecasting.
pub struct RollingForecaster {
    pub name: String,
    pub fit: FitConfig,
    pub forecast: ForecastConfig,
}

impl Forecaster for RollingForecaster {
    fn name(&self) -> &str {
        &self.name
    }

    fn required_history(&self) -> usize {
        self.fit.lags.burn_in() + 1
    }

    fn forecast(&self, states: &StateMatrix, origin: usize, horizon: usize) -> Result<OriginForecast> {
        let history = states.history_through(origin);
        let model = crate::irwls::fit(&history, &self.fit)?;
        model_forecast(&model, &self.forecast, &history, origin, horizon)
    }
}

pub struct BaselineForecaster<'a> {
    pub name: String,
    pub model: &'a BaselineModel,
}

impl Forecaster for BaselineForecaster<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn required_history(&self) -> usize {
        self.model.order().max(1)
    }

    fn forecast(&self, states: &StateMatrix, origin: usize, horizon: usize) -> Result<OriginForecast> {
        let history = window(states, origin, self.required_history());
        Ok(OriginForecast {
            point: baseline_forecast(self.model, &history, horizon)?,
            paths: None,
        })
    }
}

fn origin_seed(seed: u64, origin: usize) -> u64 {
    seed ^ (origin as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Errors of one model at every origin and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelErrors {
    pub name: String,
    /// `errors[i][h]`: forecast minus realization per component.
    pub errors: Vec<Vec<StateVector>>,
    /// Forecast wind direction from the wind components.
    pub direction: Vec<Vec<Option<f64>>>,
    /// PIT of every component, present for ensemble forecasters.
    pub pit: Option<Vec<Vec<StateVector>>>,
}

impl ModelErrors {
    pub fn component_errors(&self, c: Component) -> Vec<Vec<f64>> {
        self.errors
            .iter()
            .map(|row| row.iter().map(|e| e[c.index()]).collect())
            .collect()
    }

    pub fn accuracy(&self, c: Component) -> Vec<AccuracyRow> {
        rmse_mae(&self.component_errors(c))
    }

    /// Absolute angular error per origin at horizon `h + 1`, NaN when undefined.
    pub fn direction_errors(&self, actual: &[Vec<Option<f64>>], h: usize) -> Vec<f64> {
        self.direction
            .iter()
            .zip(actual)
            .map(|(f, a)| match (f[h], a[h]) {
                (Some(f), Some(a)) => direction_error(f, a),
                _ => f64::NAN,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Absolute,
    Squared,
}

impl Loss {
    pub fn apply(self, e: f64) -> f64 {
        match self {
            Loss::Absolute => e.abs(),
            Loss::Squared => e * e,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::Absolute => "absolute",
            Loss::Squared => "squared",
        }
    }
}

/// Result of evaluating several forecasters on common origins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub config: EvaluationConfig,
    /// Row indices of the origins in the evaluated state matrix.
    pub origins: Vec<usize>,
    pub origin_times: Vec<i64>,
    /// Realized wind direction at every origin and horizon.
    pub actual_direction: Vec<Vec<Option<f64>>>,
    pub models: Vec<ModelErrors>,
}

/// Evaluates `forecasters` on random origins drawn from rows
/// `split + min_history - 1 ..= T - 1 - H`, where `min_history` is the longest
/// history any forecaster needs.
pub fn evaluate(
    states: &StateMatrix,
    split: usize,
    forecasters: &[&dyn Forecaster],
    config: &EvaluationConfig,
) -> Result<EvaluationRun> {
    config.validate()?;
    let h_len = config.horizon;
    let min_history = forecasters.iter().map(|f| f.required_history()).max().unwrap_or(1);
    // The first rows of the out-of-sample window only serve as history.
    let first = split + min_history.saturating_sub(1);
    if states.len() < h_len + 1 {
        return Err(Error::InsufficientData {
            required: h_len + 1,
            available: states.len(),
        });
    }
    let last = states.len() - 1 - h_len;
    let origins = draw_origins(first, last, config.n_origins, config.seed)?;
    let origin_times = origins.iter().map(|&o| states.time_index(o)).collect();

    let actual_direction: Vec<Vec<Option<f64>>> = origins
        .iter()
        .map(|&o| (1..=h_len).map(|h| states.wind_direction(o + h)).collect())
        .collect();

    let mut models = Vec::with_capacity(forecasters.len());
    for f in forecasters {
        let per_origin: Vec<(Vec<StateVector>, Vec<Option<f64>>, Option<Vec<StateVector>>)> = origins
            .par_iter()
            .map(|&o| {
                let fc = f.forecast(states, o, h_len)?;
                let mut errs = Vec::with_capacity(h_len);
                let mut dirs = Vec::with_capacity(h_len);
                for (h, y) in fc.point.iter().enumerate() {
                    let actual = states.row(o + h + 1);
                    errs.push(std::array::from_fn(|m| y[m] - actual[m]));
                    dirs.push(direction_deg(y[Component::Ws.index()], y[Component::Wc.index()]));
                }
                let pit = fc.paths.map(|paths| {
                    let mut rng = ChaCha8Rng::seed_from_u64(origin_seed(config.seed, o));
                    let mut ens = vec![0.0; paths.len()];
                    (0..h_len)
                        .map(|h| {
                            let actual = states.row(o + h + 1);
                            std::array::from_fn(|m| {
                                for (e, p) in ens.iter_mut().zip(&paths) {
                                    *e = p[h][m];
                                }
                                pit_value(&ens, actual[m], &mut rng)
                            })
                        })
                        .collect()
                });
                Ok((errs, dirs, pit))
            })
            .collect::<Result<_>>()?;
        let has_pit = per_origin.iter().all(|r| r.2.is_some()) && !per_origin.is_empty();
        let mut errors = Vec::with_capacity(origins.len());
        let mut direction = Vec::with_capacity(origins.len());
        let mut pit = Vec::new();
        for (e, d, p) in per_origin {
            errors.push(e);
            direction.push(d);
            if let Some(p) = p {
                pit.push(p);
            }
        }
        models.push(ModelErrors {
            name: f.name().to_string(),
            errors,
            direction,
            pit: has_pit.then_some(pit),
        });
    }
    Ok(EvaluationRun {
        config: config.clone(),
        origins,
        origin_times,
        actual_direction,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmRow {
    pub variable: String,
    pub horizon: usize,
    pub loss: Loss,
    pub model_a: String,
    pub model_b: String,
    pub result: DmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitRow {
    pub model: String,
    pub variable: String,
    /// `None` pools all horizons.
    pub horizon: Option<usize>,
    pub histogram: PitHistogram,
}

/// Horizons reported in the JSON summary and PIT tables.
pub fn report_horizons(h_len: usize) -> Vec<usize> {
    let mut hs: Vec<usize> = [1, 6, 36, 144].into_iter().filter(|&h| h <= h_len).collect();
    if !hs.contains(&h_len) {
        hs.push(h_len);
    }
    hs
}

impl EvaluationRun {
    pub fn model(&self, name: &str) -> Option<&ModelErrors> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn direction_table(&self, model: &ModelErrors) -> Vec<DirectionRow> {
        maeoa(&model.direction, &self.actual_direction)
    }

    /// Loss series over origins for one variable and horizon. Direction
    /// uses the angular error; origins with an undefined direction in either
    /// model are dropped from both series.
    fn loss_pair(&self, a: &ModelErrors, b: &ModelErrors, variable: Option<Component>, h: usize, loss: Loss) -> (Vec<f64>, Vec<f64>) {
        let (la, lb): (Vec<f64>, Vec<f64>) = match variable {
            Some(c) => (
                a.errors.iter().map(|r| loss.apply(r[h][c.index()])).collect(),
                b.errors.iter().map(|r| loss.apply(r[h][c.index()])).collect(),
            ),
            None => (
                a.direction_errors(&self.actual_direction, h).into_iter().map(|e| loss.apply(e)).collect(),
                b.direction_errors(&self.actual_direction, h).into_iter().map(|e| loss.apply(e)).collect(),
            ),
        };
        la.into_iter().zip(lb).filter(|(x, y)| x.is_finite() && y.is_finite()).unzip()
    }

    /// Diebold-Mariano test of `a` against `b`. `variable = None` compares
    /// wind direction errors.
    pub fn dm(&self, a: &str, b: &str, variable: Option<Component>, horizon: usize, loss: Loss) -> Result<DmResult> {
        let ma = self.model(a).ok_or_else(|| Error::Config(format!("unknown model {a}")))?;
        let mb = self.model(b).ok_or_else(|| Error::Config(format!("unknown model {b}")))?;
        let (la, lb) = self.loss_pair(ma, mb, variable, horizon - 1, loss);
        diebold_mariano(&la, &lb, horizon)
    }

    /// DM tests for every ordered model pair, variable, horizon and loss.
    /// Pairs with too few comparable origins are skipped.
    pub fn dm_table(&self) -> Vec<DmRow> {
        let mut variables: Vec<Option<Component>> = Component::ALL.iter().copied().map(Some).collect();
        variables.push(None);
        let mut rows = Vec::new();
        for a in &self.models {
            for b in &self.models {
                if a.name == b.name {
                    continue;
                }
                for &v in &variables {
                    for h in 1..=self.config.horizon {
                        for loss in [Loss::Absolute, Loss::Squared] {
                            let (la, lb) = self.loss_pair(a, b, v, h - 1, loss);
                            if let Ok(result) = diebold_mariano(&la, &lb, h) {
                                rows.push(DmRow {
                                    variable: variable_name(v).to_string(),
                                    horizon: h,
                                    loss,
                                    model_a: a.name.clone(),
                                    model_b: b.name.clone(),
                                    result,
                                });
                            }
                        }
                    }
                }
            }
        }
        rows
    }

    /// PIT histograms per model and component, pooled and at report horizons.
    pub fn pit_table(&self) -> Result<Vec<PitRow>> {
        let mut rows = Vec::new();
        for m in &self.models {
            let Some(pit) = &m.pit else { continue };
            for c in Component::ALL {
                let pooled: Vec<f64> = pit.iter().flat_map(|r| r.iter().map(move |v| v[c.index()])).collect();
                rows.push(PitRow {
                    model: m.name.clone(),
                    variable: c.name().to_string(),
                    horizon: None,
                    histogram: pit_histogram(&pooled, self.config.pit_bins)?,
                });
                for h in report_horizons(self.config.horizon) {
                    let vals: Vec<f64> = pit.iter().map(|r| r[h - 1][c.index()]).collect();
                    rows.push(PitRow {
                        model: m.name.clone(),
                        variable: c.name().to_string(),
                        horizon: Some(h),
                        histogram: pit_histogram(&vals, self.config.pit_bins)?,
                    });
                }
            }
        }
        Ok(rows)
    }

    /// Writes `accuracy.csv`, `direction.csv`, `dm.csv`, `pit.csv`,
    /// `yaw_loss.csv` and `summary.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut w = csv_writer(&dir.join("accuracy.csv"))?;
        w.write_record(["model", "variable", "horizon", "rmse", "mae", "n"])?;
        for m in &self.models {
            for c in Component::ALL {
                for r in m.accuracy(c) {
                    w.write_record([
                        m.name.clone(),
                        c.name().to_string(),
                        r.horizon.to_string(),
                        r.rmse.to_string(),
                        r.mae.to_string(),
                        r.n.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv_writer(&dir.join("direction.csv"))?;
        w.write_record(["model", "horizon", "maeoa", "n", "undefined", "yaw_power", "yaw_raw"])?;
        let mut yaw = csv_writer(&dir.join("yaw_loss.csv"))?;
        yaw.write_record(["model", "horizon", "maeoa", "power", "raw", "floored", "reference_deg", "reference_power"])?;
        let reference = yaw_loss(YAW_REFERENCE_DEG);
        for m in &self.models {
            for r in self.direction_table(m) {
                let y = yaw_loss(r.maeoa);
                w.write_record([
                    m.name.clone(),
                    r.horizon.to_string(),
                    r.maeoa.to_string(),
                    r.n.to_string(),
                    r.undefined.to_string(),
                    y.power.to_string(),
                    y.raw.to_string(),
                ])?;
                yaw.write_record([
                    m.name.clone(),
                    r.horizon.to_string(),
                    r.maeoa.to_string(),
                    y.power.to_string(),
                    y.raw.to_string(),
                    y.floored.to_string(),
                    YAW_REFERENCE_DEG.to_string(),
                    reference.power.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
        yaw.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv_writer(&dir.join("dm.csv"))?;
        w.write_record(["variable", "horizon", "loss", "model_a", "model_b", "statistic", "p_value", "mean_differential", "degenerate", "n"])?;
        for r in self.dm_table() {
            w.write_record([
                r.variable,
                r.horizon.to_string(),
                r.loss.name().to_string(),
                r.model_a,
                r.model_b,
                r.result.statistic.to_string(),
                r.result.p_value.to_string(),
                r.result.mean_differential.to_string(),
                r.result.degenerate.to_string(),
                r.result.n.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let pit = self.pit_table()?;
        let mut w = csv_writer(&dir.join("pit.csv"))?;
        w.write_record(["model", "variable", "horizon", "bin", "lower", "upper", "count", "density"])?;
        for r in &pit {
            let bins = r.histogram.counts.len();
            for (b, &c) in r.histogram.counts.iter().enumerate() {
                w.write_record([
                    r.model.clone(),
                    r.variable.clone(),
                    r.horizon.map_or_else(|| "all".to_string(), |h| h.to_string()),
                    (b + 1).to_string(),
                    (b as f64 / bins as f64).to_string(),
                    ((b + 1) as f64 / bins as f64).to_string(),
                    c.to_string(),
                    (c as f64 * bins as f64 / r.histogram.n.max(1) as f64).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let summary = self.summary(pit);
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    pub fn summary(&self, pit: Vec<PitRow>) -> EvaluationSummary {
        let horizons = report_horizons(self.config.horizon);
        let models = self
            .models
            .iter()
            .map(|m| {
                let dir = self.direction_table(m);
                ModelSummary {
                    name: m.name.clone(),
                    accuracy: Component::ALL
                        .iter()
                        .map(|&c| {
                            let acc = m.accuracy(c);
                            (c.name().to_string(), horizons.iter().map(|&h| acc[h - 1]).collect())
                        })
                        .collect(),
                    direction: horizons.iter().map(|&h| dir[h - 1]).collect(),
                }
            })
            .collect();
        EvaluationSummary {
            config: self.config.clone(),
            n_origins: self.origins.len(),
            first_origin_time: self.origin_times.first().copied(),
            last_origin_time: self.origin_times.last().copied(),
            report_horizons: horizons,
            models,
            pit: pit.into_iter().filter(|r| r.horizon.is_none()).collect(),
        }
    }
}

fn variable_name(v: Option<Component>) -> &'static str {
    v.map_or("direction", Component::name)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub accuracy: std::collections::BTreeMap<String, Vec<AccuracyRow>>,
    pub direction: Vec<DirectionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub config: EvaluationConfig,
    pub n_origins: usize,
    pub first_origin_time: Option<i64>,
    pub last_origin_time: Option<i64>,
    pub report_horizons: Vec<usize>,
    pub models: Vec<ModelSummary>,
    pub pit: Vec<PitRow>,
}

/// Writes one JSON value followed by a newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer).map_err(|e| Error::io(Path::new("<writer>"), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_hand_arithmetic() {
        let rows = rmse_mae(&[vec![1.0], vec![-1.0], vec![3.0], vec![-3.0]]);
        assert_eq!(rows[0].mae, 2.0);
        assert!((rows[0].rmse - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn direction_examples() {
        assert_eq!(direction_error(5.0, 345.0), 20.0);
        assert_eq!(direction_error(90.0, 90.0), 0.0);
        assert_eq!(direction_error(0.0, 180.0), 180.0);
    }

    #[test]
    fn yaw_examples() {
        assert_eq!(yaw_loss(0.0).power, 1.0);
        assert!(yaw_loss(90.0).power.abs() < 1e-15);
        assert!((yaw_loss(30.0).power - 3.0 * 3f64.sqrt() / 8.0).abs() < 1e-12);
        let y = yaw_loss(120.0);
        assert!(y.floored && y.power == 0.0 && y.raw < 0.0);
    }

    #[test]
    fn dm_identical_and_dominated() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64).sin().abs()).collect();
        let r = diebold_mariano(&a, &a, 1).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        let r = diebold_mariano(&a, &b, 3).unwrap();
        assert!(r.degenerate && r.p_value < 1e-10 && r.statistic < 0.0);
        assert!(diebold_mariano(&a[..10], &b[..10], 1).is_err());
    }

    #[test]
    fn single_value_one_bin() {
        let h = pit_histogram(&[0.3], 1).unwrap();
        assert_eq!(h.counts, vec![1]);
        assert_eq!(h.max_deviation, 0.0);
    }

    #[test]
    fn origins_distinct_and_bounded() {
        let o = draw_origins(10, 50, 41, 3).unwrap();
        assert_eq!(o, (10..=50).collect::<Vec<_>>());
        assert!(draw_origins(10, 50, 42, 3).is_err());
    }
}
