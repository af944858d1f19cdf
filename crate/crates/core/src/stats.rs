//! Small descriptive-statistics helpers shared across modules.

use nalgebra::DMatrix;

/// Quantile of an ascending-sorted sample by linear interpolation between
/// order statistics (the "type 7" convention): `h = (n - 1) p`, then
/// `x[floor(h)] + (h - floor(h)) (x[floor(h) + 1] - x[floor(h)])`.
///
/// `sorted` must be non-empty and `p` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Sorts a copy of `values` (NaN-free) and evaluates each level in `levels`.
pub fn quantiles(values: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    levels.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with divisor `n`.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / values.len() as f64).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Sample autocorrelations at lags `1..=max_lag` with the usual biased
/// (divisor `n`) autocovariance estimator.
pub fn acf(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let m = mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    (1..=max_lag)
        .map(|k| {
            if k >= n || c0 == 0.0 {
                return 0.0;
            }
            let ck: f64 = centered[k..]
                .iter()
                .zip(&centered[..n - k])
                .map(|(a, b)| a * b)
                .sum();
            ck / c0
        })
        .collect()
}

/// Cross-correlation `corr(a_t, b_{t-k})` for `k = 0..=max_lag`.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ma = mean(a);
    let mb = mean(b);
    let sa = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>();
    let sb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>();
    let denom = (sa * sb).sqrt();
    (0..=max_lag)
        .map(|k| {
            if k >= n || denom == 0.0 {
                return 0.0;
            }
            let s: f64 = (k..n).map(|t| (a[t] - ma) * (b[t - k] - mb)).sum();
            s / denom
        })
        .collect()
}

/// Spectral radius of the companion matrix of a VAR with lag matrices
/// `lag_matrices[l]` (coefficient of lag `l + 1`), all `k x k`.
pub fn companion_spectral_radius(lag_matrices: &[DMatrix<f64>]) -> f64 {
    let Some(first) = lag_matrices.first() else {
        return 0.0;
    };
    let k = first.nrows();
    let order = lag_matrices.len();
    let dim = k * order;
    let mut c = DMatrix::zeros(dim, dim);
    for (l, a) in lag_matrices.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(a);
    }
    for i in k..dim {
        c[(i, i - k)] = 1.0;
    }
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
