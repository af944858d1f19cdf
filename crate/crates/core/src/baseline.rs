//! Benchmark forecasters: persistence, univariate AR and VAR fitted by
//! Yule-Walker on demeaned data, with AIC order selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::MaskMatrix;
use crate::error::{Error, Result};
use crate::stats::companion_spectral_radius;
use crate::timeseries::{StateMatrix, StateVector};

pub const DEFAULT_VAR_MAX_ORDER: usize = 10;
pub const DEFAULT_AR_MAX_ORDER: usize = 40;
/// Diagonal jitter, relative to the mean diagonal, used when a Yule-Walker
/// system is numerically singular.
pub const RIDGE_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Persistence,
    Ar,
    Var,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Persistence => "persistence",
            BaselineKind::Ar => "ar",
            BaselineKind::Var => "var",
        }
    }

    pub fn default_max_order(self) -> usize {
        match self {
            BaselineKind::Persistence => 0,
            BaselineKind::Ar => DEFAULT_AR_MAX_ORDER,
            BaselineKind::Var => DEFAULT_VAR_MAX_ORDER,
        }
    }
}

/// A fitted benchmark model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    /// Order of every equation (all equal for VAR).
    pub orders: [usize; 6],
    /// `coefficients[l][m][s]` multiplies source `s` at lag `l + 1` in equation `m`.
    pub coefficients: Vec<[[f64; 6]; 6]>,
    pub means: StateVector,
    /// In-sample one-step innovation covariance.
    pub innovation_cov: [[f64; 6]; 6],
    /// AIC by candidate order (per equation for AR, joint for VAR).
    pub aic: Vec<Vec<f64>>,
    /// A Yule-Walker system needed diagonal jitter.
    pub regularized: bool,
    pub spectral_radius: f64,
}

impl BaselineModel {
    pub fn order(&self) -> usize {
        self.orders.iter().copied().max().unwrap_or(0)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

/// Biased sample autocovariances of demeaned data:
/// `gamma[k][a][b] = (1/T) sum_t x[t, a] x[t - k, b]`.
struct Autocov {
    gamma: Vec<[[f64; 6]; 6]>,
}

impl Autocov {
    fn new(x: &[StateVector], max_lag: usize) -> Self {
        let n = x.len();
        let gamma = (0..=max_lag)
            .map(|k| {
                let mut g = [[0.0; 6]; 6];
                for t in k..n {
                    for a in 0..6 {
                        for b in 0..6 {
                            g[a][b] += x[t][a] * x[t - k][b];
                        }
                    }
                }
                for row in g.iter_mut() {
                    for v in row.iter_mut() {
                        *v /= n as f64;
                    }
                }
                g
            })
            .collect();
        Autocov { gamma }
    }

    /// `E[x[t + k, a] x[t, b]]` for any integer `k`.
    fn at(&self, k: isize, a: usize, b: usize) -> f64 {
        if k >= 0 {
            self.gamma[k as usize][a][b]
        } else {
            self.gamma[(-k) as usize][b][a]
        }
    }
}

/// Solves the Yule-Walker equations of equation `m` with sources `sources`
/// and order `p`. Returns coefficients indexed `[lag][source position]`.
fn yule_walker_equation(ac: &Autocov, m: usize, sources: &[usize], p: usize) -> (Vec<Vec<f64>>, bool) {
    let k = sources.len() * p;
    if k == 0 {
        return (Vec::new(), false);
    }
    let idx = |l: usize, si: usize| l * sources.len() + si;
    let mut a = DMatrix::zeros(k, k);
    let mut r = DVector::zeros(k);
    for l in 0..p {
        for (si, &s) in sources.iter().enumerate() {
            r[idx(l, si)] = ac.at(l as isize + 1, m, s);
            for l2 in 0..p {
                for (sj, &s2) in sources.iter().enumerate() {
                    a[(idx(l, si), idx(l2, sj))] = ac.at(l2 as isize - l as isize, s, s2);
                }
            }
        }
    }
    let mut regularized = false;
    let sol = match a.clone().cholesky() {
        Some(ch) => ch.solve(&r),
        None => {
            regularized = true;
            let mean_diag = a.diagonal().mean().abs().max(f64::MIN_POSITIVE);
            for i in 0..k {
                a[(i, i)] += RIDGE_JITTER * mean_diag;
            }
            match a.clone().cholesky() {
                Some(ch) => ch.solve(&r),
                None => a.lu().solve(&r).unwrap_or_else(|| DVector::zeros(k)),
            }
        }
    };
    let coefs = (0..p)
        .map(|l| (0..sources.len()).map(|si| sol[idx(l, si)]).collect())
        .collect();
    (coefs, regularized)
}

fn demean(states: &StateMatrix) -> (Vec<StateVector>, StateVector) {
    let n = states.len() as f64;
    let mut means = [0.0; 6];
    for r in states.rows() {
        for m in 0..6 {
            means[m] += r[m];
        }
    }
    means.iter_mut().for_each(|v| *v /= n);
    let x = states
        .rows()
        .iter()
        .map(|r| std::array::from_fn(|m| r[m] - means[m]))
        .collect();
    (x, means)
}

/// One-step in-sample residuals of equation `m` over rows `from..T`.
fn residuals(x: &[StateVector], coefs: &[[[f64; 6]; 6]], m: usize, from: usize) -> Vec<f64> {
    (from..x.len())
        .map(|t| {
            let mut pred = 0.0;
            for (l, a) in coefs.iter().enumerate() {
                for s in 0..6 {
                    pred += a[m][s] * x[t - l - 1][s];
                }
            }
            x[t][m] - pred
        })
        .collect()
}

fn covariance(res: &[Vec<f64>]) -> [[f64; 6]; 6] {
    let n = res[0].len() as f64;
    let mut c = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            c[a][b] = res[a].iter().zip(&res[b]).map(|(u, v)| u * v).sum::<f64>() / n;
        }
    }
    c
}

fn log_det(c: &[[f64; 6]; 6]) -> f64 {
    let m = DMatrix::from_fn(6, 6, |i, j| c[i][j]);
    match m.cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

fn spectral_radius(coefs: &[[[f64; 6]; 6]]) -> f64 {
    let mats: Vec<DMatrix<f64>> = coefs
        .iter()
        .map(|a| DMatrix::from_fn(6, 6, |i, j| a[i][j]))
        .collect();
    companion_spectral_radius(&mats)
}

fn check_input(states: &StateMatrix, p_max: usize) -> Result<()> {
    if states.len() < 2 * p_max + 2 {
        return Err(Error::InsufficientData {
            required: 2 * p_max + 2,
            available: states.len(),
        });
    }
    if !states.all_finite() {
        return Err(Error::NumericalInput("state matrix"));
    }
    Ok(())
}

/// Yule-Walker fit of a fixed order with source restrictions given by `mask`.
pub fn fit_yule_walker(states: &StateMatrix, order: usize, mask: &MaskMatrix) -> Result<BaselineModel> {
    check_input(states, order)?;
    let (x, means) = demean(states);
    let ac = Autocov::new(&x, order);
    let mut coefs = vec![[[0.0; 6]; 6]; order];
    let mut regularized = false;
    for m in 0..6 {
        let sources = mask.sources(m);
        let (c, reg) = yule_walker_equation(&ac, m, &sources, order);
        regularized |= reg;
        for (l, row) in c.iter().enumerate() {
            for (si, &s) in sources.iter().enumerate() {
                coefs[l][m][s] = row[si];
            }
        }
    }
    let res: Vec<Vec<f64>> = (0..6).map(|m| residuals(&x, &coefs, m, order)).collect();
    finish(BaselineKind::Var, [order; 6], coefs, means, covariance(&res), Vec::new(), regularized)
}

fn finish(
    kind: BaselineKind,
    orders: [usize; 6],
    coefficients: Vec<[[f64; 6]; 6]>,
    means: StateVector,
    innovation_cov: [[f64; 6]; 6],
    aic: Vec<Vec<f64>>,
    regularized: bool,
) -> Result<BaselineModel> {
    let spectral_radius = spectral_radius(&coefficients);
    if spectral_radius >= 1.0 {
        log::warn!(
            "{} baseline is not stable (companion spectral radius {spectral_radius:.4})",
            kind.name()
        );
    }
    if regularized {
        log::warn!("{} baseline needed diagonal jitter in Yule-Walker", kind.name());
    }
    Ok(BaselineModel {
        kind,
        orders,
        coefficients,
        means,
        innovation_cov,
        aic,
        regularized,
        spectral_radius,
    })
}

/// Fits a benchmark. AR and VAR pick the order in `0..=p_max` with the
/// smallest AIC on a common sample `p_max..T`.
pub fn fit_baseline(kind: BaselineKind, states: &StateMatrix, p_max: usize) -> Result<BaselineModel> {
    match kind {
        BaselineKind::Persistence => {
            if states.is_empty() {
                return Err(Error::InsufficientData {
                    required: 1,
                    available: 0,
                });
            }
            finish(kind, [0; 6], Vec::new(), [0.0; 6], [[0.0; 6]; 6], Vec::new(), false)
        }
        BaselineKind::Ar => fit_ar(states, p_max),
        BaselineKind::Var => fit_var(states, p_max),
    }
}

fn fit_ar(states: &StateMatrix, p_max: usize) -> Result<BaselineModel> {
    check_input(states, p_max)?;
    let (x, means) = demean(states);
    let ac = Autocov::new(&x, p_max);
    let n_eff = (x.len() - p_max) as f64;
    let mut orders = [0; 6];
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(6);
    let mut aic_table = Vec::with_capacity(6);
    let mut regularized = false;
    for m in 0..6 {
        let mut best = (f64::INFINITY, 0, Vec::new());
        let mut aics = Vec::with_capacity(p_max + 1);
        for p in 0..=p_max {
            let (c, reg) = yule_walker_equation(&ac, m, &[m], p);
            let phi: Vec<f64> = c.iter().map(|row| row[0]).collect();
            let ss: f64 = (p_max..x.len())
                .map(|t| {
                    let pred: f64 = phi.iter().enumerate().map(|(l, f)| f * x[t - l - 1][m]).sum();
                    (x[t][m] - pred).powi(2)
                })
                .sum();
            let aic = n_eff * (ss / n_eff).ln() + 2.0 * p as f64;
            aics.push(aic);
            if aic < best.0 {
                best = (aic, p, phi);
                regularized |= reg;
            }
        }
        orders[m] = best.1;
        chosen.push(best.2);
        aic_table.push(aics);
    }
    let order = orders.iter().copied().max().unwrap_or(0);
    let mut coefs = vec![[[0.0; 6]; 6]; order];
    for m in 0..6 {
        for (l, f) in chosen[m].iter().enumerate() {
            coefs[l][m][m] = *f;
        }
    }
    let res: Vec<Vec<f64>> = (0..6).map(|m| residuals(&x, &coefs, m, order)).collect();
    finish(BaselineKind::Ar, orders, coefs, means, covariance(&res), aic_table, regularized)
}

fn fit_var(states: &StateMatrix, p_max: usize) -> Result<BaselineModel> {
    check_input(states, p_max)?;
    let (x, means) = demean(states);
    let ac = Autocov::new(&x, p_max);
    let n_eff = (x.len() - p_max) as f64;
    let all: Vec<usize> = (0..6).collect();
    let mut best: Option<(f64, usize, Vec<[[f64; 6]; 6]>, bool)> = None;
    let mut aics = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        let mut coefs = vec![[[0.0; 6]; 6]; p];
        let mut reg = false;
        for m in 0..6 {
            let (c, r) = yule_walker_equation(&ac, m, &all, p);
            reg |= r;
            for (l, row) in c.iter().enumerate() {
                for s in 0..6 {
                    coefs[l][m][s] = row[s];
                }
            }
        }
        let res: Vec<Vec<f64>> = (0..6).map(|m| residuals(&x, &coefs, m, p_max)).collect();
        let aic = n_eff * log_det(&covariance(&res)) + 2.0 * (36 * p) as f64;
        aics.push(aic);
        if best.as_ref().is_none_or(|b| aic < b.0) {
            best = Some((aic, p, coefs, reg));
        }
    }
    let (_, p, coefs, reg) = best.expect("at least order 0");
    let res: Vec<Vec<f64>> = (0..6).map(|m| residuals(&x, &coefs, m, p)).collect();
    finish(BaselineKind::Var, [p; 6], coefs, means, covariance(&res), vec![aics], reg)
}

/// Forecasts `horizon` steps past the last row of `history`.
pub fn baseline_forecast(model: &BaselineModel, history: &StateMatrix, horizon: usize) -> Result<Vec<StateVector>> {
    let n = history.len();
    let p = model.order();
    if n == 0 || n < p {
        return Err(Error::InsufficientData {
            required: p.max(1),
            available: n,
        });
    }
    if model.kind == BaselineKind::Persistence {
        return Ok(vec![*history.row(n - 1); horizon]);
    }
    let mut x: Vec<StateVector> = history.rows()[n - p..]
        .iter()
        .map(|r| std::array::from_fn(|m| r[m] - model.means[m]))
        .collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = x.len();
        let next: StateVector = std::array::from_fn(|m| {
            let mut v = 0.0;
            for (l, a) in model.coefficients.iter().enumerate() {
                for s in 0..6 {
                    v += a[m][s] * x[t - l - 1][s];
                }
            }
            v
        });
        x.push(next);
        out.push(std::array::from_fn(|m| next[m] + model.means[m]));
    }
    Ok(out)
}
