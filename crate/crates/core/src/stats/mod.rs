//! The analysis toolkit: Mann-Whitney U, Holm-Bonferroni step-down
//! correction, and bootstrapped confidence intervals of the median.
//!
//! Tests are two-sided throughout.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::seed::{self, tag};

/// Exact enumeration is limited to this pooled sample size; beyond it the
/// normal approximation applies.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("exact mode supports n1+n2 <= {EXACT_LIMIT}, got {0}")]
    ExactTooLarge(usize),
    #[error("alpha {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error("p-value {0} outside [0, 1]")]
    BadP(f64),
    #[error("iterations must be >= 1")]
    NoIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub u_statistic: f64,
    pub p_value: f64,
    pub method: MwuMethod,
    pub n1: usize,
    pub n2: usize,
}

/// U statistics for both labels: `U_x = #{x_i > y_j} + 1/2 #{x_i = y_j}`.
pub fn u_counts(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut ux = 0.0;
    for &a in x {
        for &b in y {
            if a > b {
                ux += 1.0;
            } else if a == b {
                ux += 0.5;
            }
        }
    }
    (ux, (x.len() * y.len()) as f64 - ux)
}

fn min_u(x: &[f64], y: &[f64]) -> f64 {
    let (ux, uy) = u_counts(x, y);
    ux.min(uy)
}

/// Two-sided exact p: the fraction of the C(n1+n2, n1) equally-likely label
/// assignments whose min-U is at most the observed one.
fn exact_p(x: &[f64], y: &[f64], observed: f64) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let n = pooled.len();
    let n1 = x.len();
    let mut hits = 0u64;
    let mut total = 0u64;
    // tiny tolerance absorbs the half-count arithmetic on tied pools
    let threshold = observed + 1e-9;
    for subset in (0..n).combinations(n1) {
        let mut in_x = vec![false; n];
        for &i in &subset {
            in_x[i] = true;
        }
        let xs: Vec<f64> = (0..n).filter(|&i| in_x[i]).map(|i| pooled[i]).collect();
        let ys: Vec<f64> = (0..n).filter(|&i| !in_x[i]).map(|i| pooled[i]).collect();
        if min_u(&xs, &ys) <= threshold {
            hits += 1;
        }
        total += 1;
    }
    hits as f64 / total as f64
}

/// Normal approximation with tie correction and continuity correction.
fn approx_p(x: &[f64], y: &[f64], observed: f64) -> f64 {
    let n1 = x.len() as f64;
    let n2 = y.len() as f64;
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;

    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut run = 1usize;
    for i in 1..=pooled.len() {
        if i < pooled.len() && pooled[i] == pooled[i - 1] {
            run += 1;
        } else {
            if run > 1 {
                let t = run as f64;
                tie_term += t * t * t - t;
            }
            run = 1;
        }
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0; // all pooled values identical
    }
    let z = (observed - mu + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(z)).clamp(0.0, 1.0)
}

/// Two-sided Mann-Whitney U test. `u_statistic` is `min(U_x, U_y)`.
pub fn mann_whitney_u(
    x: &[f64],
    y: &[f64],
    method: MwuMethod,
) -> Result<ComparisonResult, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let observed = min_u(x, y);
    let p_value = match method {
        MwuMethod::Exact => {
            let n = x.len() + y.len();
            if n > EXACT_LIMIT {
                return Err(StatsError::ExactTooLarge(n));
            }
            exact_p(x, y, observed)
        }
        MwuMethod::NormalApprox => approx_p(x, y, observed),
    };
    Ok(ComparisonResult {
        u_statistic: observed,
        p_value,
        method,
        n1: x.len(),
        n2: y.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub raw_p: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub reject: Vec<bool>,
    pub alpha: f64,
}

/// Holm-Bonferroni step-down correction. Rejection of the i-th smallest p
/// requires every j <= i to clear alpha / (m - j + 1); adjusted p-values are
/// the running maximum of min(1, (m - j + 1) p_(j)).
pub fn holm_bonferroni(p: &[f64], alpha: f64) -> Result<CorrectionReport, StatsError> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(StatsError::BadAlpha(alpha));
    }
    for &v in p {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(StatsError::BadP(v));
        }
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));

    let mut adjusted_p = vec![0.0; m];
    let mut reject = vec![false; m];
    let mut running_max = 0.0f64;
    let mut still_rejecting = true;
    for (rank, &idx) in order.iter().enumerate() {
        let factor = (m - rank) as f64;
        running_max = running_max.max((factor * p[idx]).min(1.0));
        adjusted_p[idx] = running_max;
        still_rejecting = still_rejecting && p[idx] <= alpha / factor;
        reject[idx] = still_rejecting;
    }
    Ok(CorrectionReport {
        raw_p: p.to_vec(),
        adjusted_p,
        reject,
        alpha,
    })
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    median_of_sorted(&s)
}

fn percentile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// 95% percentile bootstrap CI of the median: `iterations` seeded resamples
/// with replacement, 2.5th/97.5th percentiles of the resampled medians.
/// Per-iteration RNG streams make the result independent of evaluation
/// order.
pub fn bootstrap_median_ci(
    sample: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<(f64, f64), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if iterations == 0 {
        return Err(StatsError::NoIterations);
    }
    let n = sample.len();
    let mut medians: Vec<f64> = (0..iterations as u64)
        .into_par_iter()
        .map(|i| {
            use rand::Rng;
            let mut rng = seed::rng(seed, &[tag::BOOT, i]);
            let mut resample: Vec<f64> = (0..n).map(|_| sample[rng.random_range(0..n)]).collect();
            resample.sort_by(f64::total_cmp);
            median_of_sorted(&resample)
        })
        .collect();
    medians.sort_by(f64::total_cmp);
    Ok((
        percentile_of_sorted(&medians, 0.025),
        percentile_of_sorted(&medians, 0.975),
    ))
}

/// Asterisk convention for adjusted p-values: one star at 0.01, two at
/// 0.001, three at 0.0001.
pub fn significance_tier(adjusted_p: f64) -> &'static str {
    if adjusted_p < 0.0001 {
        "***"
    } else if adjusted_p < 0.001 {
        "**"
    } else if adjusted_p < 0.01 {
        "*"
    } else {
        ""
    }
}
