//! Distribution tests, tail diagnostics and the replication harness.

mod replicate;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

pub use replicate::{
    replicate, run_experiment, Experiment, ReplicationOutput, SampleSet, HILL_FRACTIONS, HILL_THRESHOLD,
};

/// Significance level used by every distributional acceptance test.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Minimum sample size accepted by the KS tests.
pub const MIN_KS_SAMPLES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples must be positive and finite")]
    NonPositiveSample,
    #[error("k = {k} out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub test_id: String,
    pub sample_size: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub censoring_rate: Option<f64>,
}

impl StatReport {
    pub fn with_censoring(mut self, rate: f64) -> Self {
        self.censoring_rate = Some(rate);
        self
    }

    pub fn named(mut self, id: impl Into<String>) -> Self {
        self.test_id = id.into();
        self
    }
}

/// Reference laws for the one-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Reference {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Reference::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<(), StatsError> {
        let ok = match *self {
            Reference::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Reference::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(StatsError::InvalidInput(format!("{self:?}")))
        }
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // the alternating series converges slowly here; the true value is 1 to
        // double precision
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn finite_sorted(samples: &[f64]) -> Result<Vec<f64>, StatsError> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sided one-sample KS statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, StatsError> {
    let v = finite_sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Two-sample KS statistic `sup |F_n - G_m|`, ties handled by stepping over
/// equal values together.
pub fn ks_statistic_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let a = finite_sorted(a)?;
    let b = finite_sorted(b)?;
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

/// One-sample KS test with the asymptotic Kolmogorov p-value; passes when
/// `p > alpha`.
pub fn ks_test(samples: &[f64], reference: Reference, alpha: f64) -> Result<StatReport, StatsError> {
    reference.validate()?;
    if samples.len() < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewSamples { needed: MIN_KS_SAMPLES, got: samples.len() });
    }
    let d = ks_statistic(samples, |x| reference.cdf(x))?;
    let p = kolmogorov_sf((samples.len() as f64).sqrt() * d);
    Ok(StatReport {
        test_id: format!("ks_one_sample:{reference:?}"),
        sample_size: samples.len(),
        statistic: d,
        threshold: alpha,
        p_value: Some(p),
        pass: p > alpha,
        censoring_rate: None,
    })
}

/// Two-sample KS test with effective size `n m / (n + m)`.
pub fn ks_test_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<StatReport, StatsError> {
    let small = a.len().min(b.len());
    if small < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewSamples { needed: MIN_KS_SAMPLES, got: small });
    }
    let d = ks_statistic_two_sample(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let p = kolmogorov_sf((n * m / (n + m)).sqrt() * d);
    Ok(StatReport {
        test_id: "ks_two_sample".into(),
        sample_size: a.len() + b.len(),
        statistic: d,
        threshold: alpha,
        p_value: Some(p),
        pass: p > alpha,
        censoring_rate: None,
    })
}

/// Pearson chi-square goodness of fit against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64], alpha: f64) -> Result<StatReport, StatsError> {
    if counts.len() < 2 {
        return Err(StatsError::InvalidInput("need at least two cells".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = (counts.len() - 1) as f64;
    let p = ChiSquared::new(df).expect("positive df").sf(stat);
    Ok(StatReport {
        test_id: "chi_square_uniform".into(),
        sample_size: total as usize,
        statistic: stat,
        threshold: alpha,
        p_value: Some(p),
        pass: p > alpha,
        censoring_rate: None,
    })
}

/// Pearson correlation; `None` when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Lag-1 correlation of a series, checked against `+-3/sqrt(n)`.
pub fn lag1_correlation(series: &[f64]) -> Result<StatReport, StatsError> {
    if series.len() < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: series.len() });
    }
    let rho = correlation(&series[..series.len() - 1], &series[1..]).unwrap_or(0.0);
    let band = 3.0 / ((series.len() - 1) as f64).sqrt();
    Ok(StatReport {
        test_id: "lag1_correlation".into(),
        sample_size: series.len(),
        statistic: rho,
        threshold: band,
        p_value: None,
        pass: rho.abs() <= band,
        censoring_rate: None,
    })
}

/// Hill tail-index estimate with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Hill estimator over the top `k` order statistics at 95% confidence.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<HillEstimate, StatsError> {
    hill_estimator_at(samples, k, 0.95)
}

pub fn hill_estimator_at(samples: &[f64], k: usize, confidence: f64) -> Result<HillEstimate, StatsError> {
    if samples.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(StatsError::NonPositiveSample);
    }
    let n = samples.len();
    if k == 0 || 2 * k >= n {
        return Err(StatsError::KOutOfRange { k, n });
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let threshold = v[k].ln();
    let mean_excess = v[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    let alpha = if mean_excess > 0.0 { 1.0 / mean_excess } else { f64::INFINITY };
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let half = z * alpha / (k as f64).sqrt();
    Ok(HillEstimate { n, k, alpha, ci_low: alpha - half, ci_high: alpha + half })
}

/// Hill estimates at `k = round(f n)` for each fraction `f`.
pub fn hill_grid(samples: &[f64], fractions: &[f64]) -> Result<Vec<HillEstimate>, StatsError> {
    fractions
        .iter()
        .map(|f| hill_estimator(samples, ((f * samples.len() as f64).round() as usize).max(1)))
        .collect()
}

/// Hill estimates at a fixed `k` over nested prefixes of sizes `n/100`,
/// `n/10`, `n`. A light tail shows up as an estimate that keeps growing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailGrowth {
    pub estimates: Vec<HillEstimate>,
    pub light_tailed: bool,
}

pub fn hill_growth(samples: &[f64], k: usize, growth: f64) -> Result<TailGrowth, StatsError> {
    let n = samples.len();
    let sizes = [n / 100, n / 10, n];
    let estimates: Vec<HillEstimate> =
        sizes.iter().filter(|&&m| m > 2 * k).map(|&m| hill_estimator(&samples[..m], k)).collect::<Result<_, _>>()?;
    if estimates.len() < 2 {
        return Err(StatsError::KOutOfRange { k, n });
    }
    let increasing = estimates.windows(2).all(|w| w[1].alpha > w[0].alpha);
    let light_tailed = increasing && estimates.last().unwrap().alpha >= growth * estimates[0].alpha;
    Ok(TailGrowth { estimates, light_tailed })
}

/// Partial means at sample sizes `10^2, 10^3, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub checkpoints: Vec<(usize, f64)>,
    pub factor: f64,
    /// The partial mean grew by more than `factor` per decade on average.
    pub diverging: bool,
}

pub fn running_mean_divergence(samples: &[f64], factor: f64) -> Result<DivergenceReport, StatsError> {
    if samples.len() < 100 {
        return Err(StatsError::TooFewSamples { needed: 100, got: samples.len() });
    }
    let mut checkpoints = Vec::new();
    let mut sum = 0.0;
    let mut next = 100;
    for (i, x) in samples.iter().enumerate() {
        sum += x;
        if i + 1 == next {
            checkpoints.push((next, sum / next as f64));
            next *= 10;
        }
    }
    // growth per decade, averaged geometrically over the curve
    let diverging = checkpoints.len() >= 2 && {
        let (first, last) = (checkpoints[0].1, checkpoints[checkpoints.len() - 1].1);
        first > 0.0 && last > first * factor.powi(checkpoints.len() as i32 - 1)
    };
    Ok(DivergenceReport { checkpoints, factor, diverging })
}

/// Partial mean over the first `m` samples.
pub fn partial_mean(samples: &[f64], m: usize) -> Option<f64> {
    (m > 0 && m <= samples.len()).then(|| samples[..m].iter().sum::<f64>() / m as f64)
}
