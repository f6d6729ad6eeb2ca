//! Descriptive statistics and the Student-t distribution.
//!
//! Estimator conventions: standard deviation uses the `n - 1` denominator;
//! skewness `m3 / m2^1.5` and kurtosis `m4 / m2^2` use biased central
//! moments `m_k = sum((x - mean)^k) / n`. Kurtosis is not excess kurtosis,
//! so a normal sample gives about 3.

mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use special::{ln_gamma, regularized_incomplete_beta};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },
}

/// The summary rows of a descriptive statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub maximum: f64,
    pub minimum: f64,
    pub std_dev: f64,
    /// `None` when the sample has zero variance.
    pub skewness: Option<f64>,
    /// Non-excess kurtosis; `None` when the sample has zero variance.
    pub kurtosis: Option<f64>,
}

pub fn describe(samples: &[f64]) -> Result<DescriptiveStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite { index });
    }
    let n = samples.len();
    let nf = n as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (minimum, maximum) = (sorted[0], sorted[n - 1]);
    // rounding in the sum can push the mean off a constant series or
    // outside the sample range
    let mean = if minimum == maximum {
        minimum
    } else {
        (samples.iter().sum::<f64>() / nf).clamp(minimum, maximum)
    };

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let ss = m2;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    let std_dev = if n > 1 { (ss / (nf - 1.0)).sqrt() } else { 0.0 };
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };

    Ok(DescriptiveStats {
        n,
        mean,
        median,
        maximum,
        minimum,
        std_dev,
        skewness,
        kurtosis,
    })
}

fn check_df(df: f64) -> Result<(), StatsError> {
    if df.is_nan() || df <= 0.0 {
        return Err(StatsError::InvalidDf(df));
    }
    Ok(())
}

/// Upper tail mass `P(T > |t|)` for `t != 0`.
fn upper_tail(t: f64, df: f64) -> Result<f64, StatsError> {
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)?)
}

/// Student-t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t is NaN".into()));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let tail = upper_tail(t, df)?;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided p-value `2 (1 - cdf(|t|))`.
pub fn two_sided_p(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t is NaN".into()));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok((2.0 * upper_tail(t, df)?).min(1.0))
}
