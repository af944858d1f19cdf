//! Weighted LASSO by cyclic coordinate descent along a decreasing grid of
//! penalty values, with optional sign constraints and AIC-based selection.
//!
//! The objective for one penalty value `lambda` is
//!
//! ```text
//! 1/2 sum_t w_t (y_t - x_t' z)^2 + lambda sum_{j penalized} s_j |z_j|
//! ```
//!
//! where `s_j` is the weighted standard deviation of column `j` when
//! standardization is on (and 1 otherwise). Internally the solver works with
//! standardized columns, so `lambda` is expressed on that scale; coefficients
//! are always reported on the original scale.
//!
//! An intercept column can be handled exactly: the response and all other
//! columns are centered with the weighted means, and the intercept is
//! recovered at the end. This keeps a constant of order 1000 (air pressure in
//! hPa) from dominating the conditioning of the problem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Soft-threshold operator `sign(z) max(|z| - g, 0)`.
pub fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Exact minimizer along one coordinate: `S(rho, lambda) / d`, or
/// `max(0, rho - lambda) / d` under a sign constraint. `d == 0` freezes the
/// coordinate at zero.
pub fn coordinate_update(rho: f64, d: f64, lambda: f64, nonnegative: bool) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if nonnegative {
        (rho - lambda).max(0.0) / d
    } else {
        soft_threshold(rho, lambda) / d
    }
}

/// How the per-coordinate gradients are maintained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Gram mode when the design is narrow enough, naive otherwise.
    #[default]
    Auto,
    /// Precompute `Z'WZ` by streaming over row blocks; updates cost `O(p)`.
    Gram,
    /// Keep the residual vector; updates cost `O(n)`.
    Naive,
}

/// Widest design for which `Auto` picks Gram mode.
pub const GRAM_MAX_COLUMNS: usize = 2500;

/// A weighted LASSO problem. Rows of `x`, `y` and `weights` are aligned.
#[derive(Debug, Clone)]
pub struct LassoProblem<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a [f64],
    /// Row weights; `None` means all ones.
    pub weights: Option<&'a [f64]>,
    /// Constrain every coefficient except the intercept to be nonnegative.
    pub nonnegative: bool,
    /// Column of ones fitted exactly through centering.
    pub intercept: Option<usize>,
    /// Columns fitted without penalty.
    pub unpenalized: Vec<usize>,
    pub standardize: bool,
}

impl<'a> LassoProblem<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &'a [f64]) -> Self {
        LassoProblem {
            x,
            y,
            weights: None,
            nonnegative: false,
            intercept: None,
            unpenalized: Vec::new(),
            standardize: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let (n, p) = self.x.shape();
        if self.y.len() != n {
            return Err(Error::Config(format!(
                "response has {} rows, design has {n}",
                self.y.len()
            )));
        }
        if n < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                available: n,
            });
        }
        if let Some(w) = self.weights {
            if w.len() != n {
                return Err(Error::Config(format!("{} weights for {n} rows", w.len())));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NumericalInput("weights"));
            }
            if w.iter().all(|v| *v == 0.0) {
                return Err(Error::Degenerate("all weights are zero".to_string()));
            }
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalInput("response"));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalInput("design matrix"));
        }
        if let Some(c) = self.intercept {
            if c >= p {
                return Err(Error::Config(format!("intercept column {c} out of range")));
            }
            let col = self.x.column(c);
            let v = col[0];
            if v == 0.0 || col.iter().any(|x| *x != v) {
                return Err(Error::Config(format!("intercept column {c} is not constant")));
            }
        }
        if let Some(&j) = self.unpenalized.iter().find(|&&j| j >= p) {
            return Err(Error::Config(format!("unpenalized column {j} out of range")));
        }
        Ok(())
    }
}

/// Grid and stopping settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of `lambda_max`.
    pub lambda_min_ratio: f64,
    /// Solve at the single penalty `ratio * lambda_max` instead of a grid.
    pub fixed_ratio: Option<f64>,
    /// A sweep converges once every coordinate move lowers the residual sum
    /// of squares by less than `tol` times the total sum of squares
    /// (`max_j d_j dz_j^2 < tol * TSS`).
    pub tol: f64,
    pub max_sweeps: usize,
    pub mode: SolverMode,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            n_lambda: 100,
            lambda_min_ratio: 1e-4,
            fixed_ratio: None,
            tol: 1e-7,
            max_sweeps: 100_000,
            mode: SolverMode::Auto,
        }
    }
}

/// Solution at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    /// Nonzero coefficients on the original scale, ascending by column.
    pub coefficients: Vec<(usize, f64)>,
    /// Number of nonzero coefficients, intercept included.
    pub df: usize,
    pub weighted_rss: f64,
    pub aic: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Solutions along the grid plus the AIC choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub n_obs: usize,
    pub n_cols: usize,
    pub lambda_max: f64,
    pub path: Vec<PathPoint>,
    pub selected: usize,
}

impl LassoFit {
    pub fn selected_point(&self) -> &PathPoint {
        &self.path[self.selected]
    }

    pub fn selected_lambda(&self) -> f64 {
        self.path[self.selected].lambda
    }

    /// Dense coefficient vector at the selected grid value.
    pub fn coefficients(&self) -> Vec<f64> {
        self.dense(self.selected)
    }

    pub fn dense(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for &(j, v) in &self.path[index].coefficients {
            out[j] = v;
        }
        out
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.path.iter().map(|p| p.lambda).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.path.iter().all(|p| p.converged)
    }
}

/// `T log(wRSS / T) + 2 df`.
pub fn aic(n_obs: usize, weighted_rss: f64, df: usize) -> f64 {
    let t = n_obs as f64;
    t * (weighted_rss / t).ln() + 2.0 * df as f64
}

/// Index of the smallest AIC, preferring the larger penalty on ties. The
/// path is ordered by decreasing penalty.
pub fn select_aic(path: &[PathPoint]) -> usize {
    let mut best = 0;
    for (i, p) in path.iter().enumerate().skip(1) {
        if p.aic < path[best].aic {
            best = i;
        }
    }
    best
}

enum Backend<'a> {
    Gram {
        /// `Z'WZ` of the standardized columns.
        gram: DMatrix<f64>,
        /// `Z'W y~`.
        zy: Vec<f64>,
        /// `Z'W r` for the current coefficients.
        grad: Vec<f64>,
    },
    Naive {
        x: &'a DMatrix<f64>,
        /// `y~ - Z beta`.
        resid: Vec<f64>,
    },
}

/// Coordinate descent state for one problem; exposed so that callers can
/// drive single sweeps.
pub struct CoordinateDescent<'a> {
    n: usize,
    p: usize,
    w: Vec<f64>,
    wsum: f64,
    xbar: Vec<f64>,
    scale: Vec<f64>,
    /// `Z_j' W Z_j`, zero for frozen columns.
    d: Vec<f64>,
    penalized: Vec<bool>,
    nonnegative: bool,
    intercept: Option<usize>,
    intercept_value: f64,
    ybar: f64,
    y_tilde: Vec<f64>,
    yy: f64,
    tss: f64,
    beta: Vec<f64>,
    backend: Backend<'a>,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(problem: &LassoProblem<'a>, mode: SolverMode) -> Result<Self> {
        problem.validate()?;
        let x = problem.x;
        let (n, p) = x.shape();
        let w: Vec<f64> = match problem.weights {
            Some(w) => w.to_vec(),
            None => vec![1.0; n],
        };
        let wsum: f64 = w.iter().sum();
        let center = problem.intercept.is_some();

        let mut xbar = vec![0.0; p];
        let mut ybar = 0.0;
        if center {
            for (j, xb) in xbar.iter_mut().enumerate() {
                let col = x.column(j);
                *xb = col.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() / wsum;
            }
            ybar = problem.y.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() / wsum;
        }
        let y_tilde: Vec<f64> = problem.y.iter().map(|v| v - ybar).collect();
        let yy: f64 = y_tilde.iter().zip(&w).map(|(v, wi)| wi * v * v).sum();
        let tss = if yy > 0.0 { yy } else { wsum };

        let mut penalized = vec![true; p];
        for &j in &problem.unpenalized {
            penalized[j] = false;
        }

        let use_gram = match mode {
            SolverMode::Gram => true,
            SolverMode::Naive => false,
            SolverMode::Auto => p <= GRAM_MAX_COLUMNS,
        };

        // Weighted second moments of the centered columns.
        let (second, gram) = if use_gram {
            let g = centered_gram(x, &w, &xbar);
            let diag: Vec<f64> = (0..p).map(|j| g[(j, j)]).collect();
            (diag, Some(g))
        } else {
            let diag = (0..p)
                .map(|j| {
                    let col = x.column(j);
                    col.iter()
                        .zip(&w)
                        .map(|(v, wi)| wi * (v - xbar[j]) * (v - xbar[j]))
                        .sum::<f64>()
                })
                .collect();
            (diag, None)
        };

        let mut scale = vec![0.0; p];
        for j in 0..p {
            if Some(j) == problem.intercept {
                continue;
            }
            let ms = second[j] / wsum;
            let raw_rms = (x.column(j).iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>()
                / wsum)
                .sqrt();
            if ms <= 0.0 || ms.sqrt() <= 1e-10 * raw_rms {
                continue;
            }
            scale[j] = if problem.standardize { ms.sqrt() } else { 1.0 };
        }
        let d: Vec<f64> = (0..p)
            .map(|j| {
                if scale[j] > 0.0 {
                    second[j] / (scale[j] * scale[j])
                } else {
                    0.0
                }
            })
            .collect();

        let backend = match gram {
            Some(mut g) => {
                for k in 0..p {
                    for j in 0..p {
                        let sj = scale[j];
                        let sk = scale[k];
                        g[(j, k)] = if sj > 0.0 && sk > 0.0 {
                            g[(j, k)] / (sj * sk)
                        } else {
                            0.0
                        };
                    }
                }
                let zy: Vec<f64> = (0..p)
                    .map(|j| {
                        if scale[j] == 0.0 {
                            return 0.0;
                        }
                        let col = x.column(j);
                        col.iter()
                            .zip(&w)
                            .zip(&y_tilde)
                            .map(|((v, wi), yi)| wi * (v - xbar[j]) * yi)
                            .sum::<f64>()
                            / scale[j]
                    })
                    .collect();
                Backend::Gram {
                    gram: g,
                    grad: zy.clone(),
                    zy,
                }
            }
            None => Backend::Naive {
                x,
                resid: y_tilde.clone(),
            },
        };

        let intercept_value = problem.intercept.map_or(1.0, |c| x[(0, c)]);
        Ok(CoordinateDescent {
            n,
            p,
            w,
            wsum,
            xbar,
            scale,
            d,
            penalized,
            nonnegative: problem.nonnegative,
            intercept: problem.intercept,
            intercept_value,
            ybar,
            y_tilde,
            yy,
            tss,
            beta: vec![0.0; p],
            backend,
        })
    }

    pub fn is_gram(&self) -> bool {
        matches!(self.backend, Backend::Gram { .. })
    }

    fn active(&self, j: usize) -> bool {
        self.d[j] > 0.0
    }

    /// `Z_j' W r` at the current coefficients.
    fn gradient(&self, j: usize) -> f64 {
        match &self.backend {
            Backend::Gram { grad, .. } => grad[j],
            Backend::Naive { x, resid } => {
                let col = x.column(j);
                let s: f64 = col
                    .iter()
                    .zip(&self.w)
                    .zip(resid)
                    .map(|((v, wi), ri)| wi * v * ri)
                    .sum();
                // sum_t w r = 0 whenever the columns are centered
                s / self.scale[j]
            }
        }
    }

    fn apply_change(&mut self, j: usize, delta: f64) {
        match &mut self.backend {
            Backend::Gram { gram, grad, .. } => {
                let col = gram.column(j);
                for (g, gk) in grad.iter_mut().zip(col.iter()) {
                    *g -= gk * delta;
                }
            }
            Backend::Naive { x, resid } => {
                let col = x.column(j);
                let m = self.xbar[j];
                let f = delta / self.scale[j];
                for (r, v) in resid.iter_mut().zip(col.iter()) {
                    *r -= (v - m) * f;
                }
            }
        }
    }

    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let old = self.beta[j];
        let rho = self.gradient(j) + self.d[j] * old;
        let pen = if self.penalized[j] { lambda } else { 0.0 };
        let new = coordinate_update(rho, self.d[j], pen, self.nonnegative);
        let delta = new - old;
        if delta != 0.0 {
            self.beta[j] = new;
            self.apply_change(j, delta);
        }
        self.d[j] * delta * delta
    }

    /// One cyclic pass over every free coordinate. Returns the largest
    /// `d_j dz_j^2`, the drop in the residual sum of squares a move of that
    /// size implies.
    pub fn sweep(&mut self, lambda: f64) -> f64 {
        let mut max = 0.0f64;
        for j in 0..self.p {
            if self.active(j) {
                max = max.max(self.update(j, lambda));
            }
        }
        max
    }

    fn sweep_active(&mut self, lambda: f64) -> f64 {
        let mut max = 0.0f64;
        for j in 0..self.p {
            if self.active(j) && (self.beta[j] != 0.0 || !self.penalized[j]) {
                max = max.max(self.update(j, lambda));
            }
        }
        max
    }

    /// Runs sweeps until a full pass changes nothing beyond `tol`. Returns
    /// the sweep count and whether the tolerance was met.
    pub fn solve(&mut self, lambda: f64, tol: f64, max_sweeps: usize) -> (usize, bool) {
        let thr = tol * self.tss;
        let mut sweeps = 0;
        loop {
            let m = self.sweep(lambda);
            sweeps += 1;
            if m <= thr {
                return (sweeps, true);
            }
            if sweeps >= max_sweeps {
                return (sweeps, false);
            }
            loop {
                let m = self.sweep_active(lambda);
                sweeps += 1;
                if m <= thr {
                    break;
                }
                if sweeps >= max_sweeps {
                    return (sweeps, false);
                }
            }
        }
    }

    /// Penalty at which every penalized coefficient is zero, after fitting
    /// the unpenalized ones. Leaves the state at that solution.
    pub fn lambda_max(&mut self, tol: f64, max_sweeps: usize) -> f64 {
        self.beta.iter_mut().for_each(|b| *b = 0.0);
        self.reset_backend();
        self.solve(f64::INFINITY, tol, max_sweeps);
        let mut lmax = 0.0f64;
        for j in 0..self.p {
            if self.active(j) && self.penalized[j] {
                let g = self.gradient(j);
                let v = if self.nonnegative { g.max(0.0) } else { g.abs() };
                lmax = lmax.max(v);
            }
        }
        lmax
    }

    fn reset_backend(&mut self) {
        match &mut self.backend {
            Backend::Gram { grad, zy, .. } => grad.clone_from(zy),
            Backend::Naive { resid, .. } => resid.clone_from(&self.y_tilde),
        }
    }

    /// Weighted residual sum of squares at the current coefficients.
    pub fn weighted_rss(&self) -> f64 {
        match &self.backend {
            Backend::Gram { zy, grad, .. } => {
                let bc: f64 = self.beta.iter().zip(zy).map(|(b, c)| b * c).sum();
                let bg: f64 = self.beta.iter().zip(grad).map(|(b, g)| b * g).sum();
                (self.yy - bc - bg).max(0.0)
            }
            Backend::Naive { resid, .. } => {
                resid.iter().zip(&self.w).map(|(r, w)| w * r * r).sum()
            }
        }
    }

    /// Objective on the standardized scale.
    pub fn objective(&self, lambda: f64) -> f64 {
        let pen: f64 = (0..self.p)
            .filter(|&j| self.penalized[j])
            .map(|j| self.beta[j].abs())
            .sum();
        0.5 * self.weighted_rss() + lambda * pen
    }

    /// Coefficients on the standardized scale.
    pub fn standardized(&self) -> &[f64] {
        &self.beta
    }

    /// Column scales `s_j` (zero for frozen columns).
    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    /// Dense coefficients on the original scale, intercept included.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.p)
            .map(|j| {
                if self.scale[j] > 0.0 {
                    self.beta[j] / self.scale[j]
                } else {
                    0.0
                }
            })
            .collect();
        if let Some(c) = self.intercept {
            let shift: f64 = out.iter().zip(&self.xbar).map(|(z, m)| z * m).sum();
            out[c] = (self.ybar - shift) / self.intercept_value;
        }
        out
    }

    /// Largest violation of the optimality conditions at `lambda`, recomputed
    /// from scratch on the standardized scale.
    pub fn kkt_violation(&self, lambda: f64) -> f64 {
        let grad = self.fresh_gradient();
        let mut worst = 0.0f64;
        for j in 0..self.p {
            if !self.active(j) {
                continue;
            }
            let g = grad[j];
            let b = self.beta[j];
            let pen = if self.penalized[j] { lambda } else { 0.0 };
            let v = if self.nonnegative {
                if b > 0.0 {
                    (g - pen).abs()
                } else {
                    (g - pen).max(0.0)
                }
            } else if b > 0.0 {
                (g - pen).abs()
            } else if b < 0.0 {
                (g + pen).abs()
            } else {
                (g.abs() - pen).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    fn fresh_gradient(&self) -> Vec<f64> {
        let x = match &self.backend {
            Backend::Naive { x, .. } => *x,
            Backend::Gram { gram, zy, .. } => {
                return (0..self.p)
                    .map(|j| {
                        let gb: f64 = gram.column(j).iter().zip(&self.beta).map(|(g, b)| g * b).sum();
                        zy[j] - gb
                    })
                    .collect()
            }
        };
        let mut resid = self.y_tilde.clone();
        for j in 0..self.p {
            if self.beta[j] != 0.0 {
                let f = self.beta[j] / self.scale[j];
                for (r, v) in resid.iter_mut().zip(x.column(j).iter()) {
                    *r -= (v - self.xbar[j]) * f;
                }
            }
        }
        (0..self.p)
            .map(|j| {
                if !self.active(j) {
                    return 0.0;
                }
                let s: f64 = x
                    .column(j)
                    .iter()
                    .zip(&self.w)
                    .zip(&resid)
                    .map(|((v, wi), ri)| wi * (v - self.xbar[j]) * ri)
                    .sum();
                s / self.scale[j]
            })
            .collect()
    }

    fn path_point(&self, lambda: f64, sweeps: usize, converged: bool) -> PathPoint {
        let coefs = self.coefficients();
        let coefficients: Vec<(usize, f64)> = coefs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let df = coefficients.len();
        let weighted_rss = self.weighted_rss();
        PathPoint {
            lambda,
            df,
            aic: aic(self.n, weighted_rss, df),
            weighted_rss,
            coefficients,
            sweeps,
            converged,
        }
    }

    /// Sum of the row weights.
    pub fn weight_sum(&self) -> f64 {
        self.wsum
    }
}

/// Accumulates `sum_t w_t (x_t - xbar)(x_t - xbar)'` over blocks of rows.
fn centered_gram(x: &DMatrix<f64>, w: &[f64], xbar: &[f64]) -> DMatrix<f64> {
    const BLOCK: usize = 2048;
    let (n, p) = x.shape();
    let mut g = DMatrix::zeros(p, p);
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        let block = DMatrix::from_fn(len, p, |i, j| {
            w[start + i].sqrt() * (x[(start + i, j)] - xbar[j])
        });
        let bt = block.transpose();
        g.gemm(1.0, &bt, &block, 1.0);
        start += len;
    }
    g
}

/// Solves the problem along a log-spaced grid from `lambda_max` down to
/// `lambda_min_ratio * lambda_max` with warm starts, and selects by AIC.
pub fn solve_path(problem: &LassoProblem, options: &LassoOptions) -> Result<LassoFit> {
    let mut cd = CoordinateDescent::new(problem, options.mode)?;
    if cd.d.iter().all(|v| *v == 0.0) && problem.intercept.is_none() {
        return Err(Error::Degenerate(
            "every column has zero weighted variance".to_string(),
        ));
    }
    let lmax = cd.lambda_max(options.tol, options.max_sweeps);
    let grid = lambda_grid(lmax, options);
    let mut path = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let (sweeps, converged) = cd.solve(lambda, options.tol, options.max_sweeps);
        if !converged {
            log::warn!("coordinate descent hit {sweeps} sweeps at lambda {lambda:.4e}");
        }
        path.push(cd.path_point(lambda, sweeps, converged));
    }
    let selected = select_aic(&path);
    Ok(LassoFit {
        n_obs: cd.n,
        n_cols: cd.p,
        lambda_max: lmax,
        path,
        selected,
    })
}

/// Solves at a single penalty value (standardized scale), starting from zero.
pub fn solve_at(problem: &LassoProblem, lambda: f64, options: &LassoOptions) -> Result<Vec<f64>> {
    let mut cd = CoordinateDescent::new(problem, options.mode)?;
    cd.solve(lambda, options.tol, options.max_sweeps);
    Ok(cd.coefficients())
}

fn lambda_grid(lmax: f64, options: &LassoOptions) -> Vec<f64> {
    if lmax <= 0.0 || !lmax.is_finite() {
        return vec![0.0];
    }
    if let Some(r) = options.fixed_ratio {
        return vec![lmax * r];
    }
    let n = options.n_lambda.max(1);
    if n == 1 {
        return vec![lmax];
    }
    let lo = options.lambda_min_ratio.ln();
    (0..n)
        .map(|i| lmax * (lo * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(coordinate_update(-2.0, 1.0, 0.5, true), 0.0);
        assert_eq!(coordinate_update(5.0, 0.0, 0.5, false), 0.0);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(10.0, &LassoOptions::default());
        assert_eq!(g.len(), 100);
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[99] - 1e-3).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn tie_goes_to_larger_lambda() {
        let mk = |lambda, aic| PathPoint {
            lambda,
            coefficients: vec![],
            df: 0,
            weighted_rss: 1.0,
            aic,
            sweeps: 1,
            converged: true,
        };
        let path = vec![mk(3.0, 5.0), mk(2.0, 1.0), mk(1.0, 1.0)];
        assert_eq!(select_aic(&path), 1);
    }
}
