//! Synthetic specifications and fit settings shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windcast::basis::{BasisConfig, BasisTerm};
use windcast::design::{Family, LagConfig, MaskMatrix};
use windcast::irwls::FitConfig;
use windcast::synthetic::{SyntheticSpec, TruthTerm};

pub fn shock(family: Family, eq: usize, lag: usize, c: f64) -> TruthTerm {
    TruthTerm {
        family,
        equation: eq,
        source: Some(eq),
        lag: Some(lag),
        basis: None,
        threshold: None,
        coefficient: c,
    }
}

pub fn intercept(eq: usize, c: f64) -> TruthTerm {
    TruthTerm::constant(Family::InterceptPeriodic, eq, c)
}

pub fn diurnal_only() -> BasisConfig {
    BasisConfig {
        k2: 0,
        interactions: false,
        expand_mean_lags: false,
        expand_variance_lags: false,
        ..BasisConfig::default()
    }
}

pub fn constant_sigma(sigma: f64) -> Vec<TruthTerm> {
    (0..6)
        .map(|m| TruthTerm::constant(Family::VarianceInterceptPeriodic, m, sigma))
        .collect()
}

/// Ten active autoregressive coefficients of magnitude at least 0.2 on
/// lags 1..=3 respecting the pressure/wind mask, redrawn until stable.
pub fn sparse_truth(seed: u64) -> Vec<TruthTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = MaskMatrix::standard();
    loop {
        let mut terms: Vec<TruthTerm> = (0..6)
            .map(|m| TruthTerm::ar(m, m, 1, rng.random_range(0.3..0.6)))
            .collect();
        let mut slots: Vec<(usize, usize, usize)> = (0..6)
            .flat_map(|m| (0..6).flat_map(move |s| (1..=3).map(move |l| (m, s, l))))
            .filter(|&(m, s, l)| mask.allows(m, s) && !(m == s && l == 1))
            .collect();
        slots.shuffle(&mut rng);
        for &(m, s, l) in slots.iter().take(4) {
            let mag = rng.random_range(0.2..0.3);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            terms.push(TruthTerm::ar(m, s, l, sign * mag));
        }
        let spec = SyntheticSpec {
            mean: terms.clone(),
            ..SyntheticSpec::default()
        };
        if spec.constant_ar_spectral_radius() < 0.9 {
            return terms;
        }
    }
}

pub fn sparse_spec(seed: u64, t: usize, sigma: f64) -> SyntheticSpec {
    let mut mean = sparse_truth(seed);
    for m in 0..6 {
        mean.push(intercept(m, 0.5));
    }
    SyntheticSpec {
        t,
        burn_in: 1000,
        seed,
        basis: diurnal_only(),
        mean,
        variance: constant_sigma(sigma),
        ..SyntheticSpec::default()
    }
}

/// AR(1) means with a periodic standard deviation and sign-asymmetric
/// shock effects at lag one.
pub fn tarch_spec(seed: u64, t: usize) -> SyntheticSpec {
    let mut mean = Vec::new();
    let mut variance = Vec::new();
    for m in 0..6 {
        mean.push(intercept(m, 0.2));
        mean.push(TruthTerm::ar(m, m, 1, 0.6));
        variance.push(TruthTerm::constant(Family::VarianceInterceptPeriodic, m, 0.3));
        variance.push(TruthTerm::constant(Family::VarianceInterceptPeriodic, m, 0.5).with_basis(BasisTerm::Diurnal(3)));
        variance.push(shock(Family::ArchPos, m, 1, 0.25));
        variance.push(shock(Family::ArchNeg, m, 1, 0.4));
    }
    SyntheticSpec {
        t,
        burn_in: 1000,
        seed,
        basis: diurnal_only(),
        mean,
        variance,
        ..SyntheticSpec::default()
    }
}

/// Wind process with a strong daily cycle, a regime term above a speed
/// threshold, and sign-asymmetric periodic volatility.
pub fn dominance_spec(seed: u64, t: usize) -> SyntheticSpec {
    let mut spec = tarch_spec(seed, t);
    let w = 3;
    spec.mean.retain(|x| x.equation != w);
    spec.mean.extend([
        intercept(w, 0.45),
        intercept(w, 0.9).with_basis(BasisTerm::Diurnal(3)),
        intercept(w, -0.6).with_basis(BasisTerm::Diurnal(5)),
        TruthTerm::ar(w, w, 1, 0.8),
        TruthTerm::ar(w, w, 2, 0.05),
        TruthTerm {
            family: Family::Threshold,
            equation: w,
            source: Some(w),
            lag: Some(1),
            basis: None,
            threshold: Some(3.0),
            coefficient: 0.05,
        },
    ]);
    spec
}

pub fn small_fit(j1: Vec<usize>, pq: Vec<usize>) -> FitConfig {
    FitConfig {
        lags: LagConfig {
            j1,
            j2: vec![],
            p: pq.clone(),
            q: pq,
            alphas: vec![],
        },
        basis: diurnal_only(),
        ..FitConfig::default()
    }
}
