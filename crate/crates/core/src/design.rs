//! Regressor matrices for the threshold VAR mean model and the threshold ARCH
//! standard-deviation model, with per-column metadata.
//!
//! Each equation `M` is handled on its own. Its mean regressors are, in order:
//!
//! 1. the periodic intercept: a constant plus one column per periodic factor;
//! 2. for every lag `j1` in `J1` and every source `m` allowed by the mask:
//!    `Y[m, t-j1]` followed by its products with the periodic factors;
//! 3. for every lag `j2` in `J2`, level `alpha` and allowed source `m`:
//!    `max(Y[m, t-j2], c[m, alpha])` followed by its periodic products.
//!
//! The standard-deviation regressors of equation `M` are the periodic
//! intercept, then for every `h` in `P` the positive shock
//! `1{e[M, t-h] > 0} e[M, t-h]`, then for every `l` in `Q` the negated
//! negative shock `1{e[M, t-l] <= 0} (-e[M, t-l])`, each with periodic
//! products. All of these are nonnegative.

use std::fmt;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisConfig, BasisRow, BasisTerm};
use crate::error::{Error, Result};
use crate::timeseries::{validate_alphas, StateMatrix, StateVector, ThresholdSet};

/// Lag sets of both models and the threshold percentile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagConfig {
    /// Autoregressive lags of the mean model.
    pub j1: Vec<usize>,
    /// Threshold lags of the mean model.
    pub j2: Vec<usize>,
    /// Positive-shock lags of the standard-deviation model.
    pub p: Vec<usize>,
    /// Negative-shock lags of the standard-deviation model.
    pub q: Vec<usize>,
    pub alphas: Vec<f64>,
}

impl Default for LagConfig {
    fn default() -> Self {
        let mut j1: Vec<usize> = (1..=500).collect();
        j1.extend([576, 720, 864, 1008]);
        let mut pq: Vec<usize> = (1..=40).collect();
        pq.extend(140..=150);
        LagConfig {
            j1,
            j2: vec![1, 2, 4, 9, 18, 36, 72, 144],
            p: pq.clone(),
            q: pq,
            alphas: full_alpha_set(),
        }
    }
}

/// `0.01..=0.05` by 0.01, `0.10..=0.95` by 0.05 and `0.96..=0.99` by 0.01.
pub fn full_alpha_set() -> Vec<f64> {
    let mut a: Vec<f64> = (1..=5).map(|i| i as f64 / 100.0).collect();
    a.extend((2..=19).map(|i| i as f64 * 5.0 / 100.0));
    a.extend((96..=99).map(|i| i as f64 / 100.0));
    a
}

impl LagConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, lags) in [("J1", &self.j1), ("J2", &self.j2), ("P", &self.p), ("Q", &self.q)] {
            if lags.iter().any(|&l| l == 0) {
                return Err(Error::Config(format!("lag set {name} contains 0")));
            }
            if lags.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "lag set {name} must be sorted and duplicate-free"
                )));
            }
        }
        if !self.j2.is_empty() && self.alphas.is_empty() {
            return Err(Error::Config(
                "threshold lags given without percentile levels".to_string(),
            ));
        }
        validate_alphas(&self.alphas)
    }

    /// Largest lag of the mean model (0 if it has none).
    pub fn max_mean_lag(&self) -> usize {
        self.j1.iter().chain(&self.j2).copied().max().unwrap_or(0)
    }

    /// Largest lag of the standard-deviation model (0 if it has none).
    pub fn max_variance_lag(&self) -> usize {
        self.p.iter().chain(&self.q).copied().max().unwrap_or(0)
    }

    /// Rows needed before the first estimation row.
    pub fn burn_in(&self) -> usize {
        self.max_mean_lag() + self.max_variance_lag()
    }

    fn uses_thresholds(&self) -> bool {
        !self.j2.is_empty() && !self.alphas.is_empty()
    }
}

/// Which source components may enter which target equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskMatrix(pub [[bool; 6]; 6]);

impl MaskMatrix {
    /// Pressure equations use pressure components only; wind equations use all.
    pub fn standard() -> Self {
        let mut a = [[true; 6]; 6];
        for row in a.iter_mut().take(3) {
            for cell in row.iter_mut().skip(3) {
                *cell = false;
            }
        }
        MaskMatrix(a)
    }

    pub fn full() -> Self {
        MaskMatrix([[true; 6]; 6])
    }

    pub fn diagonal() -> Self {
        let mut a = [[false; 6]; 6];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = true;
        }
        MaskMatrix(a)
    }

    pub fn allows(&self, target: usize, source: usize) -> bool {
        self.0[target][source]
    }

    pub fn sources(&self, target: usize) -> Vec<usize> {
        (0..6).filter(|&m| self.0[target][m]).collect()
    }
}

impl Default for MaskMatrix {
    fn default() -> Self {
        MaskMatrix::standard()
    }
}

/// Coefficient family of a regressor column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    InterceptPeriodic,
    Ar,
    ArPeriodic,
    Threshold,
    ThresholdPeriodic,
    ArchPos,
    ArchNeg,
    ArchPosPeriodic,
    ArchNegPeriodic,
    VarianceInterceptPeriodic,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::InterceptPeriodic => "intercept-periodic",
            Family::Ar => "ar",
            Family::ArPeriodic => "ar-periodic",
            Family::Threshold => "threshold",
            Family::ThresholdPeriodic => "threshold-periodic",
            Family::ArchPos => "arch-pos",
            Family::ArchNeg => "arch-neg",
            Family::ArchPosPeriodic => "arch-pos-periodic",
            Family::ArchNegPeriodic => "arch-neg-periodic",
            Family::VarianceInterceptPeriodic => "variance-intercept-periodic",
        }
    }

    fn periodic(self) -> Family {
        match self {
            Family::Ar => Family::ArPeriodic,
            Family::Threshold => Family::ThresholdPeriodic,
            Family::ArchPos => Family::ArchPosPeriodic,
            Family::ArchNeg => Family::ArchNegPeriodic,
            f => f,
        }
    }

    pub fn is_intercept(self) -> bool {
        matches!(self, Family::InterceptPeriodic | Family::VarianceInterceptPeriodic)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Metadata of one regressor column. Indices are 0-based in code; the
/// catalog dump writes equations and sources 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub family: Family,
    pub equation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Lagged values available when evaluating a regressor row.
pub trait LagLookup {
    /// Value of `component` at `lag` steps before the row being evaluated.
    fn lagged(&self, component: usize, lag: usize) -> f64;
}

impl ColumnSpec {
    fn intercept(family: Family, equation: usize, basis: Option<BasisTerm>) -> Self {
        ColumnSpec {
            family,
            equation,
            source: None,
            lag: None,
            basis,
            alpha_index: None,
            alpha: None,
        }
    }

    /// True for the plain constant column of an intercept family.
    pub fn is_constant(&self) -> bool {
        self.family.is_intercept() && self.basis.is_none()
    }

    /// Regressor value. For mean columns `lags` returns lagged states; for
    /// standard-deviation columns it returns lagged residuals.
    pub fn value(&self, lags: &dyn LagLookup, basis: &BasisRow, thresholds: &ThresholdSet) -> f64 {
        let factor = self.basis.map_or(1.0, |b| basis.value(b));
        let base = match self.family {
            Family::InterceptPeriodic | Family::VarianceInterceptPeriodic => 1.0,
            Family::Ar | Family::ArPeriodic => {
                lags.lagged(self.source.unwrap(), self.lag.unwrap())
            }
            Family::Threshold | Family::ThresholdPeriodic => {
                let m = self.source.unwrap();
                let y = lags.lagged(m, self.lag.unwrap());
                y.max(thresholds.value(self.alpha_index.unwrap(), m))
            }
            Family::ArchPos | Family::ArchPosPeriodic => {
                let e = lags.lagged(self.equation, self.lag.unwrap());
                if e > 0.0 {
                    e
                } else {
                    0.0
                }
            }
            Family::ArchNeg | Family::ArchNegPeriodic => {
                let e = lags.lagged(self.equation, self.lag.unwrap());
                if e <= 0.0 {
                    -e
                } else {
                    0.0
                }
            }
        };
        base * factor
    }

    /// Stable text key, e.g. `ar|eq=4|src=1|lag=3|b=2,1`.
    pub fn key(&self) -> String {
        let mut k = format!("{}|eq={}", self.family, self.equation + 1);
        if let Some(s) = self.source {
            k.push_str(&format!("|src={}", s + 1));
        }
        if let Some(l) = self.lag {
            k.push_str(&format!("|lag={l}"));
        }
        if let Some(a) = self.alpha {
            k.push_str(&format!("|alpha={a}"));
        }
        if let Some(b) = self.basis {
            let (i, j) = b.indices();
            k.push_str(&format!("|b={i},{j}"));
        }
        k
    }
}

/// Ordered column metadata of one equation's design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCatalog {
    pub columns: Vec<ColumnSpec>,
}

impl ColumnCatalog {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Index of the plain constant column, if any.
    pub fn constant_index(&self) -> Option<usize> {
        self.columns.iter().position(ColumnSpec::is_constant)
    }

    /// Mean-model catalog of equation `eq`.
    pub fn mean(eq: usize, lags: &LagConfig, basis: &BasisConfig, mask: &MaskMatrix) -> Self {
        let terms = basis.terms();
        let lag_terms: &[BasisTerm] = if basis.expand_mean_lags { &terms } else { &[] };
        let mut columns = Vec::with_capacity(mean_column_count(eq, lags, basis, mask));
        push_intercept(&mut columns, Family::InterceptPeriodic, eq, &terms);
        let sources = mask.sources(eq);
        for &j in &lags.j1 {
            for &m in &sources {
                let base = ColumnSpec {
                    family: Family::Ar,
                    equation: eq,
                    source: Some(m),
                    lag: Some(j),
                    basis: None,
                    alpha_index: None,
                    alpha: None,
                };
                push_expanded(&mut columns, base, lag_terms);
            }
        }
        if lags.uses_thresholds() {
            for &j in &lags.j2 {
                for (a, &alpha) in lags.alphas.iter().enumerate() {
                    for &m in &sources {
                        let base = ColumnSpec {
                            family: Family::Threshold,
                            equation: eq,
                            source: Some(m),
                            lag: Some(j),
                            basis: None,
                            alpha_index: Some(a),
                            alpha: Some(alpha),
                        };
                        push_expanded(&mut columns, base, lag_terms);
                    }
                }
            }
        }
        ColumnCatalog { columns }
    }

    /// Standard-deviation-model catalog of equation `eq`.
    pub fn variance(eq: usize, lags: &LagConfig, basis: &BasisConfig) -> Self {
        let terms = basis.terms();
        let lag_terms: &[BasisTerm] = if basis.expand_variance_lags { &terms } else { &[] };
        let intercept_terms: &[BasisTerm] = if basis.variance_periodic_intercept {
            &terms
        } else {
            &[]
        };
        let mut columns = Vec::with_capacity(variance_column_count(lags, basis));
        push_intercept(&mut columns, Family::VarianceInterceptPeriodic, eq, intercept_terms);
        for (family, set) in [(Family::ArchPos, &lags.p), (Family::ArchNeg, &lags.q)] {
            for &h in set {
                let base = ColumnSpec {
                    family,
                    equation: eq,
                    source: Some(eq),
                    lag: Some(h),
                    basis: None,
                    alpha_index: None,
                    alpha: None,
                };
                push_expanded(&mut columns, base, lag_terms);
            }
        }
        ColumnCatalog { columns }
    }

    /// Writes one CSV row per column: family, equation, source, lag, i1, i2, alpha.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["family", "equation", "source", "lag", "i1", "i2", "alpha"])?;
        for c in &self.columns {
            let (i1, i2) = c
                .basis
                .map(|b| {
                    let (i, j) = b.indices();
                    (i.to_string(), j.to_string())
                })
                .unwrap_or_default();
            wtr.write_record([
                c.family.name().to_string(),
                (c.equation + 1).to_string(),
                c.source.map(|s| (s + 1).to_string()).unwrap_or_default(),
                c.lag.map(|l| l.to_string()).unwrap_or_default(),
                i1,
                i2,
                c.alpha.map(|a| a.to_string()).unwrap_or_default(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<catalog writer>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }

    /// Fills `out` with the regressor values of one row.
    pub fn fill_row(
        &self,
        lags: &dyn LagLookup,
        basis: &BasisRow,
        thresholds: &ThresholdSet,
        out: &mut [f64],
    ) {
        for (slot, c) in out.iter_mut().zip(&self.columns) {
            *slot = c.value(lags, basis, thresholds);
        }
    }
}

fn push_intercept(columns: &mut Vec<ColumnSpec>, family: Family, eq: usize, terms: &[BasisTerm]) {
    columns.push(ColumnSpec::intercept(family, eq, None));
    for &t in terms {
        columns.push(ColumnSpec::intercept(family, eq, Some(t)));
    }
}

fn push_expanded(columns: &mut Vec<ColumnSpec>, base: ColumnSpec, terms: &[BasisTerm]) {
    let periodic = base.family.periodic();
    columns.push(base.clone());
    for &t in terms {
        columns.push(ColumnSpec {
            family: periodic,
            basis: Some(t),
            ..base.clone()
        });
    }
}

/// Closed-form mean-model width of equation `eq`:
/// `(1 + b) + |J1| n_src (1 + b_lag) + |J2| |alpha| n_src (1 + b_lag)`.
pub fn mean_column_count(eq: usize, lags: &LagConfig, basis: &BasisConfig, mask: &MaskMatrix) -> usize {
    let b = basis.width();
    let per_lag = 1 + if basis.expand_mean_lags { b } else { 0 };
    let n_src = mask.sources(eq).len();
    let thresholds = if lags.uses_thresholds() {
        lags.j2.len() * lags.alphas.len()
    } else {
        0
    };
    (1 + b) + (lags.j1.len() + thresholds) * n_src * per_lag
}

/// Closed-form standard-deviation-model width:
/// `(1 + b_0) + (|P| + |Q|)(1 + b_lag)`.
pub fn variance_column_count(lags: &LagConfig, basis: &BasisConfig) -> usize {
    let b = basis.width();
    let per_lag = 1 + if basis.expand_variance_lags { b } else { 0 };
    let b0 = if basis.variance_periodic_intercept { b } else { 0 };
    (1 + b0) + (lags.p.len() + lags.q.len()) * per_lag
}

/// Dense column-major regressor matrix over the estimation rows
/// `first_row .. first_row + x.nrows()` of the underlying series.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub first_row: usize,
    pub x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }
}

/// Design, catalog and response of one equation.
#[derive(Debug, Clone)]
pub struct EquationDesign {
    pub design: DesignMatrix,
    pub catalog: ColumnCatalog,
    pub response: Vec<f64>,
}

/// Lagged states relative to row `t` of a slice of state vectors.
pub struct StateLags<'a> {
    pub rows: &'a [StateVector],
    pub t: usize,
}

impl LagLookup for StateLags<'_> {
    fn lagged(&self, component: usize, lag: usize) -> f64 {
        self.rows[self.t - lag][component]
    }
}

/// Lagged residuals relative to row `t`.
pub struct ResidualLags<'a> {
    pub residuals: &'a [StateVector],
    pub t: usize,
}

impl LagLookup for ResidualLags<'_> {
    fn lagged(&self, component: usize, lag: usize) -> f64 {
        self.residuals[self.t - lag][component]
    }
}

/// Mean-model design of equation `eq` over rows `first_row..T`.
///
/// `first_row` must be at least the largest mean lag; pass
/// `lags.max_mean_lag()` to use every available row.
pub fn build_mean_design(
    states: &StateMatrix,
    thresholds: &ThresholdSet,
    basis: &BasisConfig,
    lags: &LagConfig,
    mask: &MaskMatrix,
    eq: usize,
    first_row: usize,
) -> Result<EquationDesign> {
    lags.validate()?;
    basis.validate()?;
    let max_lag = lags.max_mean_lag();
    let t_len = states.len();
    if t_len <= max_lag || t_len <= first_row {
        return Err(Error::InsufficientData {
            required: max_lag.max(first_row) + 1,
            available: t_len,
        });
    }
    if first_row < max_lag {
        return Err(Error::Config(format!(
            "first estimation row {first_row} precedes the largest lag {max_lag}"
        )));
    }
    if lags.uses_thresholds() && thresholds.len() != lags.alphas.len() {
        return Err(Error::Config(
            "threshold set does not match the configured percentile levels".to_string(),
        ));
    }
    if !states.all_finite() {
        return Err(Error::NumericalInput("state matrix"));
    }
    let catalog = ColumnCatalog::mean(eq, lags, basis, mask);
    let n = t_len - first_row;
    let p = catalog.len();
    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    let rows = states.rows();
    for r in 0..n {
        let t = first_row + r;
        let brow = basis.row(states.time_index(t));
        catalog.fill_row(&StateLags { rows, t }, &brow, thresholds, &mut row);
        for (c, v) in row.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    let response = (first_row..t_len).map(|t| rows[t][eq]).collect();
    Ok(EquationDesign {
        design: DesignMatrix { first_row, x },
        catalog,
        response,
    })
}

/// Standard-deviation design of equation `eq` over rows `first_row..T`.
///
/// `residuals` is aligned with the state rows (`time_of_row0` is the absolute
/// time index of row 0); entries needed as lags must be finite.
pub fn build_variance_design(
    residuals: &[StateVector],
    time_of_row0: i64,
    basis: &BasisConfig,
    lags: &LagConfig,
    eq: usize,
    first_row: usize,
) -> Result<EquationDesign> {
    lags.validate()?;
    basis.validate()?;
    let t_len = residuals.len();
    let max_lag = lags.max_variance_lag();
    if first_row < max_lag || t_len <= first_row {
        return Err(Error::InsufficientData {
            required: first_row.max(max_lag) + 1,
            available: t_len,
        });
    }
    let catalog = ColumnCatalog::variance(eq, lags, basis);
    let empty = ThresholdSet::empty();
    let n = t_len - first_row;
    let p = catalog.len();
    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for r in 0..n {
        let t = first_row + r;
        let brow = basis.row(time_of_row0 + t as i64);
        catalog.fill_row(&ResidualLags { residuals, t }, &brow, &empty, &mut row);
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NumericalInput("residual lags"));
            }
            x[(r, c)] = *v;
        }
    }
    let response: Vec<f64> = (first_row..t_len).map(|t| residuals[t][eq].abs()).collect();
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInput("residuals"));
    }
    Ok(EquationDesign {
        design: DesignMatrix { first_row, x },
        catalog,
        response,
    })
}
