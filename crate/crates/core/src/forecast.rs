//! Multi-step point forecasts and residual-bootstrap forecast paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{ResidualLags, StateLags};
use crate::error::{Error, Result};
use crate::irwls::FittedModel;
use crate::stats::quantile_sorted;
use crate::timeseries::{direction_deg, Component, StateMatrix, StateVector};

pub const DEFAULT_HORIZON: usize = 144;
pub const DEFAULT_LEVELS: [f64; 7] = [0.005, 0.025, 0.25, 0.5, 0.75, 0.975, 0.995];
/// Fewest paths for which quantile bands are reported.
pub const MIN_PATHS_FOR_BANDS: usize = 100;

/// Forecast settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub horizon: usize,
    /// Bootstrap paths; 0 gives the point forecast only.
    pub n_paths: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    /// Draw whole rows of standardized residuals, keeping the contemporaneous
    /// dependence between equations. Otherwise every equation draws its own row.
    pub joint_resampling: bool,
    /// Clip the speed forecast at zero.
    pub clip_speed: bool,
    /// Clip the pressure forecast at zero.
    pub clip_pressure: bool,
    /// Keep every simulated path in the result.
    pub keep_paths: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            horizon: DEFAULT_HORIZON,
            n_paths: 1000,
            seed: 1,
            levels: DEFAULT_LEVELS.to_vec(),
            joint_resampling: true,
            clip_speed: true,
            clip_pressure: false,
            keep_paths: false,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("forecast horizon must be positive".to_string()));
        }
        if self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::Config("quantile levels must lie in (0, 1)".to_string()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("quantile levels must be increasing".to_string()));
        }
        Ok(())
    }
}

/// Direction, speed and pressure implied by one forecast state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reconstructed {
    /// Wind direction from the wind components, `None` if both are zero.
    pub dir_w: Option<f64>,
    /// Wind direction from the pressure components.
    pub dir_p: Option<f64>,
    /// Speed from its own equation.
    pub speed: f64,
    /// Speed as the length of the wind component vector.
    pub speed_star: f64,
    pub pressure: f64,
    /// Pressure as the length of the pressure component vector.
    pub pressure_star: f64,
}

pub fn reconstruct(y: &StateVector, clip_speed: bool, clip_pressure: bool) -> Reconstructed {
    let p = y[Component::P.index()];
    let w = y[Component::W.index()];
    Reconstructed {
        dir_w: direction_deg(y[Component::Ws.index()], y[Component::Wc.index()]),
        dir_p: direction_deg(y[Component::Ps.index()], y[Component::Pc.index()]),
        speed: if clip_speed { w.max(0.0) } else { w },
        speed_star: y[Component::Ws.index()].hypot(y[Component::Wc.index()]),
        pressure: if clip_pressure { p.max(0.0) } else { p },
        pressure_star: y[Component::Ps.index()].hypot(y[Component::Pc.index()]),
    }
}

/// Empirical quantiles across paths; every inner vector runs over `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub levels: Vec<f64>,
    /// `state[h][l]`: quantile `levels[l]` of each component at horizon `h + 1`.
    pub state: Vec<Vec<StateVector>>,
    pub speed: Vec<Vec<f64>>,
    pub speed_star: Vec<Vec<f64>>,
    pub pressure_star: Vec<Vec<f64>>,
}

/// Point and bootstrap forecasts from one origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// Absolute time index of the origin (last observed row).
    pub origin_index: i64,
    pub horizon: usize,
    /// Deterministic rollout with zero shocks; `point[o - 1]` is horizon `o`.
    pub point: Vec<StateVector>,
    pub reconstructed: Vec<Reconstructed>,
    pub n_paths: usize,
    pub seed: u64,
    /// Path-wise median of every component.
    pub median: Option<Vec<StateVector>>,
    /// Path-wise medians of speed, speed from the components, and pressure
    /// from the components.
    pub median_derived: Option<Vec<[f64; 3]>>,
    pub bands: Option<Bands>,
    #[serde(skip)]
    pub paths: Option<Vec<Vec<StateVector>>>,
}

fn check_history(model: &FittedModel, history: &StateMatrix) -> Result<()> {
    let need = model.config.lags.burn_in().max(1);
    if history.len() < need {
        return Err(Error::InsufficientData {
            required: need,
            available: history.len(),
        });
    }
    if !history.all_finite() {
        return Err(Error::NumericalInput("forecast history"));
    }
    Ok(())
}

/// Iterates the mean recursion forward from the last row of `history` with
/// all future shocks at zero. Threshold regressors use the forecasts
/// themselves wherever the lag reaches past the origin.
pub fn point_forecast(model: &FittedModel, history: &StateMatrix, horizon: usize) -> Result<Vec<StateVector>> {
    let lag = model.config.lags.max_mean_lag();
    if history.len() < lag.max(1) {
        return Err(Error::InsufficientData {
            required: lag.max(1),
            available: history.len(),
        });
    }
    if !history.all_finite() {
        return Err(Error::NumericalInput("forecast history"));
    }
    let n = history.len();
    let first = n - lag;
    let mut rows = history.rows()[first..].to_vec();
    let t0 = history.time_index(first);
    for h in 0..horizon {
        let t = lag + h;
        let brow = model.config.basis.row(t0 + t as i64);
        let lookup = StateLags { rows: &rows, t };
        let next: StateVector = std::array::from_fn(|m| {
            model.equations[m].mean(&lookup, &brow, &model.thresholds)
        });
        rows.push(next);
    }
    Ok(rows[lag..].to_vec())
}

fn simulate_path(
    model: &FittedModel,
    window: &[StateVector],
    resid_window: &[StateVector],
    t0: i64,
    pool: &[StateVector],
    config: &ForecastConfig,
    path: u64,
) -> Vec<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path);
    let len = window.len();
    let mut rows = window.to_vec();
    let mut resid = resid_window.to_vec();
    for h in 0..config.horizon {
        let t = len + h;
        let brow = model.config.basis.row(t0 + t as i64);
        let eta: StateVector = if config.joint_resampling {
            pool[rng.random_range(0..pool.len())]
        } else {
            std::array::from_fn(|m| pool[rng.random_range(0..pool.len())][m])
        };
        let mut y = [0.0; 6];
        let mut e = [0.0; 6];
        {
            let lookup = StateLags { rows: &rows, t };
            let rlookup = ResidualLags { residuals: &resid, t };
            for m in 0..6 {
                let eq = &model.equations[m];
                let mu = eq.mean(&lookup, &brow, &model.thresholds);
                let sigma = eq.sigma(&rlookup, &brow);
                e[m] = sigma * eta[m];
                y[m] = mu + e[m];
            }
        }
        rows.push(y);
        resid.push(e);
    }
    rows[len..].to_vec()
}

/// Point forecast plus `config.n_paths` bootstrap paths. Each path draws
/// standardized in-sample residuals with replacement, scales them by the
/// standard deviation implied by the fitted recursion along the path, and
/// feeds them through the mean recursion.
pub fn bootstrap_forecast(model: &FittedModel, history: &StateMatrix, config: &ForecastConfig) -> Result<ForecastResult> {
    config.validate()?;
    check_history(model, history)?;
    let point = point_forecast(model, history, config.horizon)?;
    let reconstructed = point
        .iter()
        .map(|y| reconstruct(y, config.clip_speed, config.clip_pressure))
        .collect();
    let n = history.len();
    let origin_index = history.time_index(n - 1);
    let mut result = ForecastResult {
        origin_index,
        horizon: config.horizon,
        point,
        reconstructed,
        n_paths: config.n_paths,
        seed: config.seed,
        median: None,
        median_derived: None,
        bands: None,
        paths: None,
    };
    if config.n_paths == 0 {
        return Ok(result);
    }
    let pool = model.standardized_residuals();
    if pool.is_empty() {
        return Err(Error::Degenerate("the standardized residual pool is empty".to_string()));
    }
    if pool.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::NumericalInput("standardized residual pool"));
    }
    if config.n_paths < 1000 {
        log::warn!("{} bootstrap paths; bands are noisy below 1000", config.n_paths);
    }

    let lags = &model.config.lags;
    let window_len = lags.max_mean_lag().max(lags.max_variance_lag()).max(1);
    let first = n - window_len;
    let window = &history.rows()[first..];
    // In-sample residuals for the standard-deviation lags at the origin.
    let resid_from = n - lags.max_variance_lag();
    let resid_full = if lags.max_variance_lag() > 0 {
        model.residuals_on(history, resid_from)?
    } else {
        vec![[f64::NAN; 6]; n]
    };
    let resid_window = &resid_full[first..];
    let t0 = history.time_index(first);

    let paths: Vec<Vec<StateVector>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate_path(model, window, resid_window, t0, &pool, config, p))
        .collect();

    let h_len = config.horizon;
    let mut median = vec![[0.0; 6]; h_len];
    let mut median_derived = vec![[0.0; 3]; h_len];
    let with_bands = config.n_paths >= MIN_PATHS_FOR_BANDS;
    let mut bands = Bands {
        levels: config.levels.clone(),
        state: vec![vec![[0.0; 6]; config.levels.len()]; h_len],
        speed: vec![Vec::new(); h_len],
        speed_star: vec![Vec::new(); h_len],
        pressure_star: vec![Vec::new(); h_len],
    };
    let mut buf = vec![0.0; config.n_paths];
    for h in 0..h_len {
        for m in 0..6 {
            for (b, path) in buf.iter_mut().zip(&paths) {
                *b = path[h][m];
            }
            buf.sort_by(f64::total_cmp);
            median[h][m] = quantile_sorted(&buf, 0.5);
            if with_bands {
                for (l, &level) in config.levels.iter().enumerate() {
                    bands.state[h][l][m] = quantile_sorted(&buf, level);
                }
            }
        }
        let pickers: [fn(&Reconstructed) -> f64; 3] =
            [|r| r.speed, |r| r.speed_star, |r| r.pressure_star];
        for (k, pick) in pickers.into_iter().enumerate() {
            for (b, path) in buf.iter_mut().zip(&paths) {
                *b = pick(&reconstruct(&path[h], config.clip_speed, config.clip_pressure));
            }
            buf.sort_by(f64::total_cmp);
            median_derived[h][k] = quantile_sorted(&buf, 0.5);
            if with_bands {
                let q = config.levels.iter().map(|&l| quantile_sorted(&buf, l)).collect();
                match k {
                    0 => bands.speed[h] = q,
                    1 => bands.speed_star[h] = q,
                    _ => bands.pressure_star[h] = q,
                }
            }
        }
    }
    result.median = Some(median);
    result.median_derived = Some(median_derived);
    if with_bands {
        result.bands = Some(bands);
    } else {
        log::warn!(
            "{} paths are too few for quantile bands (need {MIN_PATHS_FOR_BANDS})",
            config.n_paths
        );
    }
    if config.keep_paths {
        result.paths = Some(paths);
    }
    Ok(result)
}

/// Writes the forecast as CSV: one row per horizon and variable with the
/// point forecast, path median and band columns.
pub fn write_forecast_csv<W: std::io::Write>(result: &ForecastResult, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let levels: Vec<f64> = result.bands.as_ref().map(|b| b.levels.clone()).unwrap_or_default();
    let mut header = vec!["horizon".to_string(), "variable".to_string(), "point".to_string()];
    if result.median.is_some() {
        header.push("median".to_string());
    }
    header.extend(levels.iter().map(|l| format!("q{l}")));
    wtr.write_record(&header)?;
    let fmt = |v: f64| v.to_string();
    for h in 0..result.horizon {
        let rec = &result.reconstructed[h];
        let mut rows: Vec<(String, f64, Option<f64>, Vec<f64>)> = Vec::new();
        for c in Component::ALL {
            let m = c.index();
            let med = result.median.as_ref().map(|md| md[h][m]);
            let q = result
                .bands
                .as_ref()
                .map(|b| b.state[h].iter().map(|r| r[m]).collect())
                .unwrap_or_default();
            rows.push((c.name().to_string(), result.point[h][m], med, q));
        }
        let derived = |pick: fn(&Bands) -> &Vec<Vec<f64>>| {
            result.bands.as_ref().map(|b| pick(b)[h].clone()).unwrap_or_default()
        };
        let has_median = result.median.is_some();
        let median_of = |k: usize| result.median_derived.as_ref().map(|md| md[h][k]);
        rows.push(("speed".into(), rec.speed, median_of(0), derived(|b| &b.speed)));
        rows.push(("speed_star".into(), rec.speed_star, median_of(1), derived(|b| &b.speed_star)));
        rows.push((
            "pressure_star".into(),
            rec.pressure_star,
            median_of(2),
            derived(|b| &b.pressure_star),
        ));
        // directions have no linear median or bands
        rows.push(("dir_w".into(), rec.dir_w.unwrap_or(f64::NAN), None, Vec::new()));
        rows.push(("dir_p".into(), rec.dir_p.unwrap_or(f64::NAN), None, Vec::new()));
        for (name, point, med, q) in rows {
            let mut rec = vec![(h + 1).to_string(), name, fmt(point)];
            if has_median {
                rec.push(med.map(fmt).unwrap_or_default());
            }
            if !levels.is_empty() {
                if q.is_empty() {
                    rec.extend(levels.iter().map(|_| String::new()));
                } else {
                    rec.extend(q.into_iter().map(fmt));
                }
            }
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<forecast writer>", e))?;
    Ok(())
}
