//! Synthetic data from a known sparse threshold VAR / threshold ARCH truth.
//!
//! The simulator evaluates the truth with its own code path rather than the
//! model's regressor catalog, so it doubles as an independent oracle for the
//! forecasting recursion.

use chrono::{DateTime, FixedOffset};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisConfig, BasisRow, BasisTerm};
use crate::design::{ColumnSpec, Family, LagConfig, MaskMatrix};
use crate::error::{Error, Result};
use crate::irwls::{EquationFit, FitConfig, FittedModel, Term};
use crate::stats::companion_spectral_radius;
use crate::timeseries::{
    direction_deg, regular_timestamps, Component, ObservationFrame, StateMatrix, StateVector,
    ThresholdSet,
};

/// Magnitude beyond which a simulated state counts as exploded.
pub const EXPLOSION_BOUND: f64 = 1e8;

/// Standardized innovation law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Innovation {
    Gaussian,
    /// Student t with `df > 2` degrees of freedom, scaled to unit variance.
    StudentT { df: f64 },
}

impl Innovation {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::Gaussian => rng.sample(StandardNormal),
            Innovation::StudentT { df } => {
                let t: f64 = rng.sample(StudentT::new(df).expect("validated df"));
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }
}

/// One true coefficient. Fields mirror the regressor catalog; threshold
/// terms carry their threshold value explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTerm {
    pub family: Family,
    pub equation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub coefficient: f64,
}

impl TruthTerm {
    pub fn constant(family: Family, equation: usize, coefficient: f64) -> Self {
        TruthTerm {
            family,
            equation,
            source: None,
            lag: None,
            basis: None,
            threshold: None,
            coefficient,
        }
    }

    pub fn ar(equation: usize, source: usize, lag: usize, coefficient: f64) -> Self {
        TruthTerm {
            family: Family::Ar,
            equation,
            source: Some(source),
            lag: Some(lag),
            basis: None,
            threshold: None,
            coefficient,
        }
    }

    pub fn with_basis(mut self, term: BasisTerm) -> Self {
        self.basis = Some(term);
        self.family = match self.family {
            Family::Ar => Family::ArPeriodic,
            Family::Threshold => Family::ThresholdPeriodic,
            Family::ArchPos => Family::ArchPosPeriodic,
            Family::ArchNeg => Family::ArchNegPeriodic,
            f => f,
        };
        self
    }

    fn is_variance(&self) -> bool {
        matches!(
            self.family,
            Family::ArchPos
                | Family::ArchNeg
                | Family::ArchPosPeriodic
                | Family::ArchNegPeriodic
                | Family::VarianceInterceptPeriodic
        )
    }
}

/// Full description of a synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Number of rows returned (after burn-in).
    pub t: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Absolute time index of the first returned row.
    pub start_index: i64,
    /// Periodic structure used by any basis-expanded truth term.
    pub basis: BasisConfig,
    /// Mean-model truth.
    pub mean: Vec<TruthTerm>,
    /// Standard-deviation truth. Must be nonnegative for nonnegative shocks.
    pub variance: Vec<TruthTerm>,
    pub innovation: Innovation,
    /// Pre-sample state; zeros when absent.
    pub initial: Option<StateVector>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            t: 5000,
            burn_in: 1000,
            seed: 1,
            start_index: 0,
            basis: BasisConfig {
                k2: 0,
                ..BasisConfig::default()
            },
            mean: Vec::new(),
            variance: (0..6)
                .map(|m| TruthTerm::constant(Family::VarianceInterceptPeriodic, m, 1.0))
                .collect(),
            innovation: Innovation::Gaussian,
            initial: None,
        }
    }
}

/// Simulated states with the true latent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub states: StateMatrix,
    pub sigma: Vec<StateVector>,
    pub eta: Vec<StateVector>,
}

impl Simulation {
    pub fn residuals(&self) -> Vec<StateVector> {
        self.sigma
            .iter()
            .zip(&self.eta)
            .map(|(s, e)| std::array::from_fn(|m| s[m] * e[m]))
            .collect()
    }
}

fn basis_factor(row: &BasisRow, term: Option<BasisTerm>) -> f64 {
    match term {
        None => 1.0,
        Some(BasisTerm::Diurnal(i)) => row.diurnal()[i - 1],
        Some(BasisTerm::Annual(j)) => row.annual()[j - 1],
        Some(BasisTerm::Interaction(i, j)) => row.diurnal()[i - 1] * row.annual()[j - 1],
    }
}

impl SyntheticSpec {
    /// A diurnal wind and pressure process with threshold and shock
    /// asymmetries, at realistic levels (hPa, m/s).
    pub fn demo() -> Self {
        let p = Component::P.index();
        let ps = Component::Ps.index();
        let pc = Component::Pc.index();
        let w = Component::W.index();
        let ws = Component::Ws.index();
        let wc = Component::Wc.index();
        let mut mean = vec![
            TruthTerm::constant(Family::InterceptPeriodic, p, 1013.0 * 0.02),
            TruthTerm::ar(p, p, 1, 1.2),
            TruthTerm::ar(p, p, 2, -0.22),
            TruthTerm::ar(ps, ps, 1, 0.95),
            TruthTerm::ar(pc, pc, 1, 0.95),
            TruthTerm::constant(Family::InterceptPeriodic, w, 0.5),
            TruthTerm::constant(Family::InterceptPeriodic, w, 0.25).with_basis(BasisTerm::Diurnal(3)),
            TruthTerm::constant(Family::InterceptPeriodic, w, -0.2).with_basis(BasisTerm::Diurnal(5)),
            TruthTerm::ar(w, w, 1, 0.85),
            TruthTerm::ar(w, p, 1, 0.0005),
            TruthTerm::ar(w, p, 2, -0.0005),
            TruthTerm::ar(ws, ws, 1, 0.93),
            TruthTerm::ar(ws, wc, 1, 0.02),
            TruthTerm::ar(wc, wc, 1, 0.93),
            TruthTerm::ar(wc, ws, 1, -0.02),
        ];
        mean.push(TruthTerm {
            family: Family::Threshold,
            equation: w,
            source: Some(w),
            lag: Some(1),
            basis: None,
            threshold: Some(6.0),
            coefficient: 0.05,
        });
        let sd = [0.08, 6.0, 6.0, 0.35, 0.45, 0.45];
        let mut variance = Vec::new();
        for (m, s) in sd.iter().enumerate() {
            variance.push(TruthTerm::constant(Family::VarianceInterceptPeriodic, m, 0.75 * s));
            for (family, c) in [(Family::ArchPos, 0.12), (Family::ArchNeg, 0.2)] {
                variance.push(TruthTerm {
                    family,
                    equation: m,
                    source: Some(m),
                    lag: Some(1),
                    basis: None,
                    threshold: None,
                    coefficient: c,
                });
            }
        }
        variance.push(
            TruthTerm::constant(Family::VarianceInterceptPeriodic, w, 0.08)
                .with_basis(BasisTerm::Diurnal(4)),
        );
        SyntheticSpec {
            t: 20_000,
            burn_in: 2000,
            seed: 7,
            mean,
            variance,
            initial: Some([1013.0, 0.0, 0.0, 4.0, 0.0, 0.0]),
            ..SyntheticSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        if self.t == 0 {
            return Err(Error::Config("synthetic length must be positive".to_string()));
        }
        if let Innovation::StudentT { df } = self.innovation {
            if !(df > 2.0) {
                return Err(Error::Config(
                    "Student t innovations need more than 2 degrees of freedom".to_string(),
                ));
            }
        }
        for term in self.mean.iter().chain(&self.variance) {
            if term.equation >= 6 || term.source.is_some_and(|s| s >= 6) {
                return Err(Error::Config("component index out of range".to_string()));
            }
            if term.lag == Some(0) {
                return Err(Error::Config("truth lags must be positive".to_string()));
            }
            let needs_lag = !term.family.is_intercept();
            if needs_lag && term.lag.is_none() {
                return Err(Error::Config(format!("{} term without a lag", term.family)));
            }
            if matches!(term.family, Family::Ar | Family::ArPeriodic | Family::Threshold | Family::ThresholdPeriodic)
                && term.source.is_none()
            {
                return Err(Error::Config(format!("{} term without a source", term.family)));
            }
            if matches!(term.family, Family::Threshold | Family::ThresholdPeriodic) && term.threshold.is_none() {
                return Err(Error::Config("threshold term without a threshold value".to_string()));
            }
            if let Some(b) = term.basis {
                let (i, j) = b.indices();
                let ok = match b {
                    BasisTerm::Diurnal(_) => self.basis.k1 >= i && i >= 1,
                    BasisTerm::Annual(_) => self.basis.k2 >= j && j >= 1,
                    BasisTerm::Interaction(_, _) => self.basis.k1 >= i && self.basis.k2 >= j,
                };
                if !ok {
                    return Err(Error::Config(format!("basis index {b:?} exceeds the basis size")));
                }
            }
        }
        for term in &self.mean {
            if term.is_variance() {
                return Err(Error::Config(format!("{} is not a mean family", term.family)));
            }
        }
        for term in &self.variance {
            if !term.is_variance() {
                return Err(Error::Config(format!("{} is not a variance family", term.family)));
            }
        }
        Ok(())
    }

    fn max_lag(&self) -> usize {
        self.mean
            .iter()
            .chain(&self.variance)
            .filter_map(|t| t.lag)
            .max()
            .unwrap_or(0)
    }

    /// Conditional mean of equation `eq` at row `t` of `rows`.
    pub fn mean_value(&self, eq: usize, rows: &[StateVector], t: usize, time_index: i64) -> f64 {
        let brow = self.basis.row(time_index);
        let mut acc = 0.0;
        for term in self.mean.iter().filter(|x| x.equation == eq) {
            let base = match term.family {
                Family::InterceptPeriodic => 1.0,
                Family::Ar | Family::ArPeriodic => rows[t - term.lag.unwrap()][term.source.unwrap()],
                Family::Threshold | Family::ThresholdPeriodic => {
                    let y = rows[t - term.lag.unwrap()][term.source.unwrap()];
                    let c = term.threshold.unwrap();
                    if y > c {
                        y
                    } else {
                        c
                    }
                }
                _ => 0.0,
            };
            acc += term.coefficient * base * basis_factor(&brow, term.basis);
        }
        acc
    }

    /// Conditional standard deviation of equation `eq` at row `t` given
    /// residuals aligned with the same rows.
    pub fn sigma_value(&self, eq: usize, resid: &[StateVector], t: usize, time_index: i64) -> f64 {
        let brow = self.basis.row(time_index);
        let mut acc = 0.0;
        for term in self.variance.iter().filter(|x| x.equation == eq) {
            let base = match term.family {
                Family::VarianceInterceptPeriodic => 1.0,
                Family::ArchPos | Family::ArchPosPeriodic => {
                    let e = resid[t - term.lag.unwrap()][eq];
                    if e > 0.0 {
                        e
                    } else {
                        0.0
                    }
                }
                Family::ArchNeg | Family::ArchNegPeriodic => {
                    let e = resid[t - term.lag.unwrap()][eq];
                    if e <= 0.0 {
                        -e
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            };
            acc += term.coefficient * base * basis_factor(&brow, term.basis);
        }
        acc
    }

    /// Spectral radius of the companion matrix of the constant
    /// autoregressive part (periodic and threshold terms ignored).
    pub fn constant_ar_spectral_radius(&self) -> f64 {
        let order = self
            .mean
            .iter()
            .filter(|t| t.family == Family::Ar)
            .filter_map(|t| t.lag)
            .max()
            .unwrap_or(0);
        if order == 0 {
            return 0.0;
        }
        let mut mats = vec![DMatrix::zeros(6, 6); order];
        for t in self.mean.iter().filter(|t| t.family == Family::Ar) {
            mats[t.lag.unwrap() - 1][(t.equation, t.source.unwrap())] += t.coefficient;
        }
        companion_spectral_radius(&mats)
    }

    /// Simulates `t` rows after `burn_in` discarded rows.
    pub fn simulate(&self) -> Result<Simulation> {
        self.validate()?;
        let lag = self.max_lag();
        let total = lag + self.burn_in + self.t;
        let t0 = self.start_index - (self.burn_in + lag) as i64;
        let init = self.initial.unwrap_or([0.0; 6]);
        let mut rows = vec![init; total];
        let mut resid = vec![[0.0; 6]; total];
        let mut sigma = vec![[0.0; 6]; total];
        let mut eta = vec![[0.0; 6]; total];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for t in lag..total {
            let time = t0 + t as i64;
            for m in 0..6 {
                let mu = self.mean_value(m, &rows, t, time);
                let s = self.sigma_value(m, &resid, t, time).max(0.0);
                let z = self.innovation.draw(&mut rng);
                let e = s * z;
                let y = mu + e;
                if !y.is_finite() || y.abs() > EXPLOSION_BOUND {
                    return Err(Error::Explosive {
                        step: t - lag,
                        spectral_radius: self.constant_ar_spectral_radius(),
                    });
                }
                rows[t][m] = y;
                resid[t][m] = e;
                sigma[t][m] = s;
                eta[t][m] = z;
            }
        }
        let keep = lag + self.burn_in;
        Ok(Simulation {
            states: StateMatrix::new(self.start_index, rows[keep..].to_vec()),
            sigma: sigma[keep..].to_vec(),
            eta: eta[keep..].to_vec(),
        })
    }

    /// Noise-free continuation of `history` for `horizon` steps.
    pub fn noise_free_rollout(&self, history: &StateMatrix, horizon: usize) -> Result<Vec<StateVector>> {
        let lag = self.max_lag();
        if history.len() < lag {
            return Err(Error::InsufficientData {
                required: lag,
                available: history.len(),
            });
        }
        let mut rows = history.rows().to_vec();
        let n = rows.len();
        for h in 0..horizon {
            let t = n + h;
            let time = history.time_index(0) + t as i64;
            rows.push([0.0; 6]);
            for m in 0..6 {
                rows[t][m] = self.mean_value(m, &rows, t, time);
            }
        }
        Ok(rows[n..].to_vec())
    }

    /// The truth written as a fitted model, with the simulated residuals,
    /// true standard deviations and innovations on the estimation rows.
    pub fn truth_model(&self, sim: &Simulation) -> Result<FittedModel> {
        self.validate()?;
        let mut thresholds: Vec<f64> = Vec::new();
        for t in &self.mean {
            if let Some(c) = t.threshold {
                if !thresholds.contains(&c) {
                    thresholds.push(c);
                }
            }
        }
        let k = thresholds.len();
        let alphas: Vec<f64> = (0..k).map(|i| (i + 1) as f64 / (k + 1) as f64).collect();
        let set = if k == 0 {
            ThresholdSet::empty()
        } else {
            ThresholdSet::new(alphas.clone(), thresholds.iter().map(|c| [*c; 6]).collect())?
        };

        let to_term = |t: &TruthTerm, column: usize| {
            let alpha_index = t
                .threshold
                .map(|c| thresholds.iter().position(|x| *x == c).unwrap());
            Term {
                column,
                spec: ColumnSpec {
                    family: t.family,
                    equation: t.equation,
                    source: if t.is_variance() && !t.family.is_intercept() {
                        Some(t.equation)
                    } else {
                        t.source
                    },
                    lag: t.lag,
                    basis: t.basis,
                    alpha_index,
                    alpha: alpha_index.map(|a| alphas[a]),
                },
                coefficient: t.coefficient,
            }
        };

        let sorted_lags = |pick: &dyn Fn(&TruthTerm) -> bool, terms: &[TruthTerm]| {
            let mut v: Vec<usize> = terms.iter().filter(|t| pick(t)).filter_map(|t| t.lag).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let lags = LagConfig {
            j1: sorted_lags(&|t| matches!(t.family, Family::Ar | Family::ArPeriodic), &self.mean),
            j2: sorted_lags(
                &|t| matches!(t.family, Family::Threshold | Family::ThresholdPeriodic),
                &self.mean,
            ),
            p: sorted_lags(
                &|t| matches!(t.family, Family::ArchPos | Family::ArchPosPeriodic),
                &self.variance,
            ),
            q: sorted_lags(
                &|t| matches!(t.family, Family::ArchNeg | Family::ArchNegPeriodic),
                &self.variance,
            ),
            alphas: alphas.clone(),
        };
        let burn = lags.burn_in();
        if sim.states.len() <= burn {
            return Err(Error::InsufficientData {
                required: burn + 1,
                available: sim.states.len(),
            });
        }
        let equations = (0..6)
            .map(|m| {
                let mean_terms = self
                    .mean
                    .iter()
                    .filter(|t| t.equation == m)
                    .enumerate()
                    .map(|(i, t)| to_term(t, i))
                    .collect();
                let variance_terms = self
                    .variance
                    .iter()
                    .filter(|t| t.equation == m)
                    .enumerate()
                    .map(|(i, t)| to_term(t, i))
                    .collect();
                EquationFit {
                    component: Component::from_index(m),
                    mean_terms,
                    variance_terms,
                    mean_columns: 0,
                    variance_columns: 0,
                    mean_lambda: 0.0,
                    variance_lambda: 0.0,
                    sigma_floor: 0.0,
                    sigma_scale: 1.0,
                }
            })
            .collect();
        let resid = sim.residuals();
        Ok(FittedModel {
            config: FitConfig {
                lags,
                basis: self.basis,
                mask: MaskMatrix::full(),
                ..FitConfig::default()
            },
            thresholds: set,
            start_index: sim.states.start_index(),
            n_rows: sim.states.len(),
            sample_start: burn,
            equations,
            residuals: resid[burn..].to_vec(),
            sigma: sim.sigma[burn..].to_vec(),
            weights: sim.sigma[burn..]
                .iter()
                .map(|s| std::array::from_fn(|m| 1.0 / (s[m] * s[m])))
                .collect(),
            trace: Vec::new(),
            iterations: 0,
            converged: true,
        })
    }
}

/// Converts simulated states to the ingestion format: pressure from `p`,
/// speed and direction from the wind components.
pub fn to_observations(states: &StateMatrix, start: DateTime<FixedOffset>) -> Result<ObservationFrame> {
    let n = states.len();
    let mut dir = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut pressure = Vec::with_capacity(n);
    for r in states.rows() {
        let ws = r[Component::Ws.index()];
        let wc = r[Component::Wc.index()];
        pressure.push(Some(r[Component::P.index()]));
        speed.push(Some(ws.hypot(wc)));
        dir.push(Some(direction_deg(ws, wc).unwrap_or(0.0)));
    }
    ObservationFrame::new(regular_timestamps(start, n), dir, speed, pressure)
}

/// Start of the synthetic calendar, 2011-01-01 00:00 UTC.
pub fn default_start() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339("2011-01-01T00:00:00+00:00").expect("valid literal")
}
