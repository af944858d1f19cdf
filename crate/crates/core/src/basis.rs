//! Periodic cubic B-spline bases for the diurnal and annual cycles.
//!
//! A basis with `k` functions over a period of `period` observations places
//! knot `i` (1-based) at `(i - 1) * period / k`; knot 1 sits at `t = 0`
//! (midnight, or January 1st for the annual cycle). Every function is a
//! shifted copy of one cardinal cubic B-spline, wrapped around the period, so
//! evaluation on `t mod period` makes the basis exactly periodic.
//!
//! Coefficient expansions drop the first function of each period, so a
//! time-varying coefficient is
//! `c_0 + sum_{i1>=2} c_{i1,1} B1_{i1}(t) + sum_{i2>=2} c_{1,i2} B2_{i2}(t)
//!  + sum_{i1,i2>=2} c_{i1,i2} B1_{i1}(t) B2_{i2}(t)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CUBIC: usize = 3;
pub const DIURNAL_PERIOD: usize = 144;
/// 365.25 days of ten-minute observations.
pub const ANNUAL_PERIOD: usize = 52_596;

/// Cardinal B-spline of `degree` on the integer knots `0, 1, ..., degree + 1`,
/// by the Cox-de Boor recursion.
pub fn cardinal_bspline(x: f64, degree: usize) -> f64 {
    if !(x >= 0.0 && x < (degree + 1) as f64) {
        return 0.0;
    }
    let span = x.floor() as usize;
    let mut n = vec![0.0; degree + 1];
    n[span] = 1.0;
    for p in 1..=degree {
        let pf = p as f64;
        for i in 0..=degree - p {
            let fi = i as f64;
            n[i] = (x - fi) / pf * n[i] + (fi + pf + 1.0 - x) / pf * n[i + 1];
        }
    }
    n[0]
}

/// `k` equidistant periodic B-splines over `period` observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicBasis {
    period: usize,
    k: usize,
    degree: usize,
}

impl PeriodicBasis {
    pub fn new(period: usize, k: usize) -> Result<Self> {
        Self::with_degree(period, k, CUBIC)
    }

    pub fn with_degree(period: usize, k: usize, degree: usize) -> Result<Self> {
        if k < degree + 1 {
            return Err(Error::Config(format!(
                "a periodic basis of degree {degree} needs at least {} functions, got {k}",
                degree + 1
            )));
        }
        if k > period {
            return Err(Error::Config(format!(
                "{k} basis functions do not fit a period of {period} observations"
            )));
        }
        Ok(PeriodicBasis { period, k, degree })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// All `k` functions at a (possibly fractional) time `t`, in observations.
    pub fn evaluate_at(&self, t: f64) -> Vec<f64> {
        let p = self.period as f64;
        let phase = t.rem_euclid(p);
        self.evaluate_phase(phase)
    }

    /// All `k` functions at the integer time index `t`.
    pub fn evaluate(&self, t: i64) -> Vec<f64> {
        let phase = t.rem_euclid(self.period as i64) as f64;
        self.evaluate_phase(phase)
    }

    fn evaluate_phase(&self, phase: f64) -> Vec<f64> {
        let k = self.k as f64;
        let u = phase * k / self.period as f64;
        let half = (self.degree + 1) as f64 / 2.0;
        (0..self.k)
            .map(|i| {
                let x = u - i as f64 + half;
                // the support spans degree + 1 <= k knot intervals, so one wrap each way suffices
                cardinal_bspline(x, self.degree)
                    + cardinal_bspline(x + k, self.degree)
                    + cardinal_bspline(x - k, self.degree)
            })
            .collect()
    }
}

/// `T x k` matrix of basis values at the given time indices.
pub fn evaluate_basis(period: usize, k: usize, t_indices: &[i64]) -> Result<DMatrix<f64>> {
    let basis = PeriodicBasis::new(period, k)?;
    let mut m = DMatrix::zeros(t_indices.len(), k);
    for (r, &t) in t_indices.iter().enumerate() {
        for (c, v) in basis.evaluate(t).into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

/// Which periodic functions multiply a regressor. Indices are 1-based with
/// the omitted first function standing for "no factor from that period".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTerm {
    Diurnal(usize),
    Annual(usize),
    Interaction(usize, usize),
}

impl BasisTerm {
    /// `(i1, i2)` pair with 1 marking the omitted period.
    pub fn indices(self) -> (usize, usize) {
        match self {
            BasisTerm::Diurnal(i) => (i, 1),
            BasisTerm::Annual(j) => (1, j),
            BasisTerm::Interaction(i, j) => (i, j),
        }
    }
}

/// Periodic structure shared by the mean and variance models.
///
/// `k1 = 0` or `k2 = 0` disables that period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisConfig {
    pub k1: usize,
    pub k2: usize,
    pub s1: usize,
    pub s2: usize,
    /// Include the diurnal x annual products.
    pub interactions: bool,
    /// Expand autoregressive and threshold coefficients periodically.
    pub expand_mean_lags: bool,
    /// Expand the shock coefficients of the standard-deviation model periodically.
    pub expand_variance_lags: bool,
    /// Let the constant of the standard-deviation model vary periodically.
    pub variance_periodic_intercept: bool,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            k1: 6,
            k2: 6,
            s1: DIURNAL_PERIOD,
            s2: ANNUAL_PERIOD,
            interactions: true,
            expand_mean_lags: true,
            expand_variance_lags: true,
            variance_periodic_intercept: true,
        }
    }
}

impl BasisConfig {
    /// No periodic terms at all: every coefficient is constant.
    pub fn constant() -> Self {
        BasisConfig {
            k1: 0,
            k2: 0,
            interactions: false,
            expand_mean_lags: false,
            expand_variance_lags: false,
            variance_periodic_intercept: false,
            ..BasisConfig::default()
        }
    }

    pub fn diurnal(&self) -> Result<Option<PeriodicBasis>> {
        (self.k1 > 0)
            .then(|| PeriodicBasis::new(self.s1, self.k1))
            .transpose()
    }

    pub fn annual(&self) -> Result<Option<PeriodicBasis>> {
        (self.k2 > 0)
            .then(|| PeriodicBasis::new(self.s2, self.k2))
            .transpose()
    }

    pub fn validate(&self) -> Result<()> {
        self.diurnal()?;
        self.annual()?;
        Ok(())
    }

    /// Periodic factors in column order: diurnal `i1 = 2..=k1`, annual
    /// `i2 = 2..=k2`, then interactions with `i1` outer and `i2` inner.
    pub fn terms(&self) -> Vec<BasisTerm> {
        let mut out = Vec::with_capacity(self.width());
        if self.k1 > 0 {
            out.extend((2..=self.k1).map(BasisTerm::Diurnal));
        }
        if self.k2 > 0 {
            out.extend((2..=self.k2).map(BasisTerm::Annual));
        }
        if self.has_interactions() {
            for i in 2..=self.k1 {
                for j in 2..=self.k2 {
                    out.push(BasisTerm::Interaction(i, j));
                }
            }
        }
        out
    }

    fn has_interactions(&self) -> bool {
        self.interactions && self.k1 > 0 && self.k2 > 0
    }

    /// Number of periodic columns attached to one expanded coefficient.
    pub fn width(&self) -> usize {
        let d = self.k1.saturating_sub(1);
        let a = self.k2.saturating_sub(1);
        d + a + if self.has_interactions() { d * a } else { 0 }
    }

    /// Basis values at one time index.
    pub fn row(&self, t: i64) -> BasisRow {
        let diurnal = match self.diurnal() {
            Ok(Some(b)) => b.evaluate(t),
            _ => Vec::new(),
        };
        let annual = match self.annual() {
            Ok(Some(b)) => b.evaluate(t),
            _ => Vec::new(),
        };
        BasisRow { diurnal, annual }
    }
}

/// Values of every basis function at a single time index.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    diurnal: Vec<f64>,
    annual: Vec<f64>,
}

impl BasisRow {
    pub fn value(&self, term: BasisTerm) -> f64 {
        match term {
            BasisTerm::Diurnal(i) => self.diurnal[i - 1],
            BasisTerm::Annual(j) => self.annual[j - 1],
            BasisTerm::Interaction(i, j) => self.diurnal[i - 1] * self.annual[j - 1],
        }
    }

    pub fn diurnal(&self) -> &[f64] {
        &self.diurnal
    }

    pub fn annual(&self) -> &[f64] {
        &self.annual
    }
}

/// Periodic regressors for a run of consecutive time indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisBlock {
    /// `T x (k1 - 1)`: functions 2..=k1 of the diurnal basis.
    pub diurnal: DMatrix<f64>,
    /// `T x (k2 - 1)`: functions 2..=k2 of the annual basis.
    pub annual: DMatrix<f64>,
    /// `T x (k1 - 1)(k2 - 1)`: products, `i1` outer and `i2` inner.
    pub interaction: DMatrix<f64>,
}

impl BasisBlock {
    pub fn rows(&self) -> usize {
        self.diurnal.nrows()
    }

    /// `[diurnal | annual | interaction]`.
    pub fn concatenated(&self) -> DMatrix<f64> {
        let t = self.rows();
        let w = self.diurnal.ncols() + self.annual.ncols() + self.interaction.ncols();
        let mut out = DMatrix::zeros(t, w);
        let mut c = 0;
        for block in [&self.diurnal, &self.annual, &self.interaction] {
            for j in 0..block.ncols() {
                out.set_column(c, &block.column(j));
                c += 1;
            }
        }
        out
    }
}

/// Periodic columns for time indices `start_index .. start_index + t_len`.
pub fn build_basis_block(cfg: &BasisConfig, start_index: i64, t_len: usize) -> Result<BasisBlock> {
    cfg.validate()?;
    let d = cfg.k1.saturating_sub(1);
    let a = cfg.k2.saturating_sub(1);
    let inter = if cfg.has_interactions() { d * a } else { 0 };
    let mut block = BasisBlock {
        diurnal: DMatrix::zeros(t_len, d),
        annual: DMatrix::zeros(t_len, a),
        interaction: DMatrix::zeros(t_len, inter),
    };
    for r in 0..t_len {
        let row = cfg.row(start_index + r as i64);
        for i in 0..d {
            block.diurnal[(r, i)] = row.diurnal[i + 1];
        }
        for j in 0..a {
            block.annual[(r, j)] = row.annual[j + 1];
        }
        if inter > 0 {
            for i in 0..d {
                for j in 0..a {
                    block.interaction[(r, i * a + j)] = row.diurnal[i + 1] * row.annual[j + 1];
                }
            }
        }
    }
    Ok(block)
}
