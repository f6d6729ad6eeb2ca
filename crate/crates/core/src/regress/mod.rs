//! Ordinary least squares with classical inference.
//!
//! Every model carries an intercept plus a non-empty subset of the three
//! explanatory variables: maturity counter `m`, trading volume `v` and open
//! interest `o`. Coefficients come from a Householder QR factorization of the
//! design matrix; standard errors use `sigma^2 = RSS / (n - k - 1)` and the
//! diagonal of `(X^T X)^{-1}` obtained from `R`. No heteroskedasticity or
//! autocorrelation correction is applied.

mod qr;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{ObservationPanel, ObservationRow};
use crate::stats::{two_sided_p, StatsError};
use qr::HouseholderQr;

/// Relative threshold on `|R_ii| / max |R_jj|` below which the design is
/// declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("insufficient data: {n} observations, need at least {required}")]
    InsufficientData { n: usize, required: usize },
    #[error("design matrix is rank deficient at column `{column}`")]
    Collinear { column: String },
    #[error("column `{column}` contains a non-finite value")]
    NonFinite { column: String },
    #[error("column lengths differ")]
    LengthMismatch,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid model `{0}`")]
    InvalidModel(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One explanatory variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predictor {
    #[serde(rename = "m")]
    Maturity,
    #[serde(rename = "v")]
    Volume,
    #[serde(rename = "o")]
    OpenInterest,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [
        Predictor::Maturity,
        Predictor::Volume,
        Predictor::OpenInterest,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Predictor::Maturity => "m",
            Predictor::Volume => "v",
            Predictor::OpenInterest => "o",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Predictor::Maturity => 1,
            Predictor::Volume => 2,
            Predictor::OpenInterest => 4,
        }
    }

    pub fn value(self, row: &ObservationRow) -> f64 {
        match self {
            Predictor::Maturity => f64::from(row.m),
            Predictor::Volume => row.v,
            Predictor::OpenInterest => row.o,
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A non-empty subset of `{m, v, o}` in canonical order. The intercept is
/// always included.
///
/// Models order by predictor count, then canonically:
/// `m, v, o, mv, mo, vo, mvo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec(u8);

impl ModelSpec {
    pub fn new(predictors: &[Predictor]) -> Result<Self, RegressError> {
        let mut mask = 0u8;
        for p in predictors {
            if mask & p.bit() != 0 {
                return Err(RegressError::InvalidModel(format!("duplicate predictor {p}")));
            }
            mask |= p.bit();
        }
        if mask == 0 {
            return Err(RegressError::InvalidModel("no predictors".into()));
        }
        Ok(ModelSpec(mask))
    }

    pub fn full() -> Self {
        ModelSpec(7)
    }

    pub fn predictors(self) -> impl Iterator<Item = Predictor> {
        Predictor::ALL
            .into_iter()
            .filter(move |p| self.0 & p.bit() != 0)
    }

    pub fn contains(self, p: Predictor) -> bool {
        self.0 & p.bit() != 0
    }

    /// Number of non-intercept predictors.
    pub fn k(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn label(self) -> String {
        self.predictors().map(Predictor::symbol).collect()
    }

    fn sort_key(self) -> (usize, [bool; 3]) {
        // canonical: earlier predictors first, so invert membership flags
        (
            self.k(),
            Predictor::ALL.map(|p| !self.contains(p)),
        )
    }
}

impl PartialOrd for ModelSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModelSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ModelSpec {
    type Err = RegressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut preds = Vec::new();
        for ch in s.trim().chars() {
            preds.push(match ch {
                'm' => Predictor::Maturity,
                'v' => Predictor::Volume,
                'o' => Predictor::OpenInterest,
                _ => return Err(RegressError::InvalidModel(s.to_string())),
            });
        }
        let spec = ModelSpec::new(&preds).map_err(|_| RegressError::InvalidModel(s.to_string()))?;
        if spec.label() != s.trim() {
            return Err(RegressError::InvalidModel(format!(
                "`{s}` is not in canonical order (expected `{spec}`)"
            )));
        }
        Ok(spec)
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Estimate and inference for one regression term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

/// Generic OLS output for an intercept plus named predictor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    /// Intercept first, then predictors in input order.
    pub terms: Vec<TermEstimate>,
    pub n: usize,
    pub residual_df: usize,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Fits `y = b0 + sum_j b_j x_j + e` by least squares.
pub fn ols_with_intercept(
    y: &[f64],
    predictors: &[(&str, &[f64])],
) -> Result<OlsSolution, RegressError> {
    let n = y.len();
    let k = predictors.len();
    if predictors.iter().any(|(_, x)| x.len() != n) {
        return Err(RegressError::LengthMismatch);
    }
    if n < k + 2 {
        return Err(RegressError::InsufficientData { n, required: k + 2 });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite {
            column: "dv".into(),
        });
    }
    for (name, x) in predictors {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite {
                column: name.to_string(),
            });
        }
    }

    let mut names = Vec::with_capacity(k + 1);
    names.push("intercept");
    names.extend(predictors.iter().map(|(name, _)| *name));
    let mut columns = Vec::with_capacity(k + 1);
    columns.push(vec![1.0; n]);
    columns.extend(predictors.iter().map(|(_, x)| x.to_vec()));

    let qr = HouseholderQr::factor(&columns);
    let diag = qr.r_diag();
    let max_diag = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(i) = diag
        .iter()
        .position(|d| d.abs() <= RANK_TOLERANCE * max_diag)
    {
        return Err(RegressError::Collinear {
            column: names[i].to_string(),
        });
    }

    let beta = qr.solve(y);
    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            columns
                .iter()
                .zip(&beta)
                .map(|(col, b)| col[i] * b)
                .sum()
        })
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();

    let residual_df = n - k - 1;
    let sigma2 = rss / residual_df as f64;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // A dependent variable that is constant up to rounding has no variation
    // to explain.
    let flat = tss <= (n as f64 * f64::EPSILON * scale).powi(2);
    let r2 = if flat {
        0.0
    } else {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / residual_df as f64;

    let gram_diag = qr.inverse_gram_diag();
    let mut terms = Vec::with_capacity(k + 1);
    for (i, name) in names.iter().enumerate() {
        let estimate = beta[i];
        let std_error = (sigma2 * gram_diag[i]).sqrt();
        let t_stat = if std_error > 0.0 {
            estimate / std_error
        } else if estimate == 0.0 {
            0.0
        } else {
            estimate.signum() * f64::INFINITY
        };
        let p_value = two_sided_p(t_stat, residual_df as f64)?;
        terms.push(TermEstimate {
            term: name.to_string(),
            estimate,
            std_error,
            t_stat,
            p_value,
        });
    }

    Ok(OlsSolution {
        terms,
        n,
        residual_df,
        rss,
        tss,
        r2,
        adj_r2,
        fitted,
        residuals,
    })
}

/// OLS output for one contract and one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: ModelSpec,
    pub n: usize,
    /// Intercept first, then the model's predictors in canonical order.
    pub terms: Vec<TermEstimate>,
    pub r2: f64,
    pub adj_r2: f64,
    pub residual_df: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn intercept(&self) -> &TermEstimate {
        &self.terms[0]
    }

    pub fn term(&self, p: Predictor) -> Option<&TermEstimate> {
        self.terms.iter().skip(1).find(|t| t.term == p.symbol())
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.estimate).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.std_error).collect()
    }

    pub fn t_stats(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.t_stat).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.p_value).collect()
    }
}

/// Fits `dv = b0 + b1 m + b2 v + b3 o + e` restricted to `model`'s terms.
pub fn ols_fit(panel: &ObservationPanel, model: ModelSpec) -> Result<RegressionFit, RegressError> {
    let y: Vec<f64> = panel.rows.iter().map(|r| r.dv).collect();
    let columns: Vec<(Predictor, Vec<f64>)> = model
        .predictors()
        .map(|p| (p, panel.rows.iter().map(|r| p.value(r)).collect()))
        .collect();
    let named: Vec<(&str, &[f64])> = columns
        .iter()
        .map(|(p, c)| (p.symbol(), c.as_slice()))
        .collect();
    let sol = ols_with_intercept(&y, &named)?;
    Ok(RegressionFit {
        model,
        n: sol.n,
        terms: sol.terms,
        r2: sol.r2,
        adj_r2: sol.adj_r2,
        residual_df: sol.residual_df,
        residuals: sol.residuals,
    })
}

/// Conventional significance bucket of a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    None,
    TenPercent,
    FivePercent,
    OnePercent,
}

impl Significance {
    pub fn stars(self) -> &'static str {
        match self {
            Significance::None => "",
            Significance::TenPercent => "*",
            Significance::FivePercent => "**",
            Significance::OnePercent => "***",
        }
    }
}

pub fn significance_stars(p: f64) -> Result<Significance, RegressError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RegressError::InvalidProbability(p));
    }
    Ok(if p < 0.01 {
        Significance::OnePercent
    } else if p < 0.05 {
        Significance::FivePercent
    } else if p < 0.10 {
        Significance::TenPercent
    } else {
        Significance::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{AssetId, ContractMonth};
    use chrono::NaiveDate;

    fn panel(rows: Vec<(f64, u32, f64, f64)>) -> ObservationPanel {
        let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        ObservationPanel {
            asset: AssetId::Bitcoin,
            contract_month: ContractMonth::new(2018, 3).unwrap(),
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (dv, m, v, o))| ObservationRow {
                    date: start + chrono::Duration::days(i as i64),
                    dv,
                    m,
                    v,
                    o,
                })
                .collect(),
            dropped: vec![],
            unmatched_spot: 0,
        }
    }

    #[test]
    fn model_order_and_labels() {
        let all: Vec<ModelSpec> = ["m", "v", "o", "mv", "mo", "vo", "mvo"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert!("vm".parse::<ModelSpec>().is_err());
        assert!("".parse::<ModelSpec>().is_err());
        assert!("mm".parse::<ModelSpec>().is_err());
        assert_eq!(ModelSpec::full().label(), "mvo");
        assert_eq!(serde_json::to_string(&ModelSpec::full()).unwrap(), "\"mvo\"");
    }

    #[test]
    fn perfect_fit() {
        let rows = (0..20u32)
            .map(|m| (2.0 + 3.0 * f64::from(m), m, 0.0, 0.0))
            .collect();
        let fit = ols_fit(&panel(rows), "m".parse().unwrap()).unwrap();
        assert!((fit.terms[0].estimate - 2.0).abs() < 1e-12);
        assert!((fit.terms[1].estimate - 3.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn constant_dependent() {
        let rows = (0..20u32).map(|m| (0.1, m, 0.0, 0.0)).collect();
        let fit = ols_fit(&panel(rows), "m".parse().unwrap()).unwrap();
        assert!(fit.terms[1].estimate.abs() < 1e-15);
        assert_eq!(fit.r2, 0.0);
        assert!(fit.p_values().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn too_few_rows() {
        let rows = (0..3u32).map(|m| (1.0 + f64::from(m), m, 1.0, 2.0)).collect();
        let err = ols_fit(&panel(rows), ModelSpec::full()).unwrap_err();
        assert!(matches!(err, RegressError::InsufficientData { n: 3, required: 5 }));
    }

    #[test]
    fn constant_open_interest_is_collinear() {
        let rows = (0..30u32)
            .map(|m| (f64::from(m % 7), m, f64::from(m * m % 11), 5.0))
            .collect();
        let err = ols_fit(&panel(rows), ModelSpec::full()).unwrap_err();
        match err {
            RegressError::Collinear { column } => assert_eq!(column, "o"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.003).unwrap(), Significance::OnePercent);
        assert_eq!(significance_stars(0.01).unwrap(), Significance::FivePercent);
        assert_eq!(significance_stars(0.05).unwrap(), Significance::TenPercent);
        assert_eq!(significance_stars(0.25).unwrap(), Significance::None);
        assert_eq!(Significance::OnePercent.stars(), "***");
        assert!(significance_stars(1.5).is_err());
        assert!(significance_stars(f64::NAN).is_err());
    }
}
