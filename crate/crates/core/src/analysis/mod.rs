//! Contract-by-contract orchestration and model selection.
//!
//! Every (contract, model) pair is fitted independently. A failed fit is
//! recorded in its slot and never aborts the batch. Summaries count a
//! variable as significant when its p-value is strictly below `alpha`;
//! failed fits are excluded from both numerator and denominator.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{AssetId, ContractMonth, ObservationPanel};
use crate::measures::DependentKind;
use crate::regress::{ols_fit, ModelSpec, Predictor, RegressError, RegressionFit};

/// Significance level used when counting significant contracts.
pub const DEFAULT_ALPHA: f64 = 0.10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no non-empty panels to analyse")]
    EmptyAnalysis,
    #[error("no models requested")]
    NoModels,
    #[error("alpha must lie in {range}, got {alpha}")]
    InvalidAlpha { alpha: f64, range: &'static str },
    #[error("model {model} has no successful fit")]
    EmptySummary { model: ModelSpec },
    #[error("no summaries to choose from")]
    NoSummaries,
}

/// Why a fit slot holds no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    InsufficientData,
    Collinear,
    NonFinite,
    Numeric,
    Other,
}

impl FailureKind {
    pub fn label(self) -> &'static str {
        match self {
            FailureKind::InsufficientData => "insufficient data",
            FailureKind::Collinear => "collinear",
            FailureKind::NonFinite => "non-finite input",
            FailureKind::Numeric => "numeric failure",
            FailureKind::Other => "fit failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub kind: FailureKind,
    pub message: String,
}

impl From<&RegressError> for FitFailure {
    fn from(err: &RegressError) -> Self {
        let kind = match err {
            RegressError::InsufficientData { .. } => FailureKind::InsufficientData,
            RegressError::Collinear { .. } => FailureKind::Collinear,
            RegressError::NonFinite { .. } => FailureKind::NonFinite,
            RegressError::Stats(_) => FailureKind::Numeric,
            _ => FailureKind::Other,
        };
        FitFailure {
            kind,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(RegressionFit),
    Failed(FitFailure),
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&RegressionFit> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::Failed(_) => None,
        }
    }
}

/// All requested fits for one contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractResult {
    pub asset: AssetId,
    pub contract_month: ContractMonth,
    pub n_rows: usize,
    pub fits: BTreeMap<ModelSpec, FitOutcome>,
}

/// The non-empty subsets of `full_set`, canonically ordered.
pub fn enumerate_models(full_set: &[Predictor]) -> Vec<ModelSpec> {
    let mut unique: Vec<Predictor> = full_set.to_vec();
    unique.sort();
    unique.dedup();
    let mut models: Vec<ModelSpec> = (1u32..(1 << unique.len()))
        .map(|mask| {
            let chosen: Vec<Predictor> = unique
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| *p)
                .collect();
            ModelSpec::new(&chosen).expect("non-empty distinct subset")
        })
        .collect();
    models.sort();
    models
}

fn check_alpha(alpha: f64, inclusive_one: bool) -> Result<(), AnalysisError> {
    let ok = alpha > 0.0 && (alpha < 1.0 || (inclusive_one && alpha == 1.0));
    if ok {
        Ok(())
    } else {
        Err(AnalysisError::InvalidAlpha {
            alpha,
            range: if inclusive_one { "(0, 1]" } else { "(0, 1)" },
        })
    }
}

/// Fits every model on every panel. Work is spread over the rayon pool;
/// results come back in input order.
pub fn run_contract_by_contract(
    panels: &[ObservationPanel],
    models: &[ModelSpec],
    alpha: f64,
) -> Result<Vec<ContractResult>, AnalysisError> {
    check_alpha(alpha, false)?;
    if models.is_empty() {
        return Err(AnalysisError::NoModels);
    }
    if panels.iter().all(ObservationPanel::is_empty) {
        return Err(AnalysisError::EmptyAnalysis);
    }
    Ok(panels
        .par_iter()
        .map(|panel| {
            let fits = models
                .iter()
                .map(|&model| {
                    let outcome = match ols_fit(panel, model) {
                        Ok(fit) => FitOutcome::Fit(fit),
                        Err(err) => FitOutcome::Failed(FitFailure::from(&err)),
                    };
                    (model, outcome)
                })
                .collect();
            ContractResult {
                asset: panel.asset.clone(),
                contract_month: panel.contract_month,
                n_rows: panel.len(),
                fits,
            }
        })
        .collect())
}

/// Aggregate significance for one variable of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub predictor: Predictor,
    pub significant: usize,
    pub significant_negative: usize,
    /// Share of successful fits where the variable is significant, in percent.
    pub pct_significant: f64,
    /// Share of significant fits with a negative coefficient, in percent.
    /// `None` when no fit is significant.
    pub pct_negative_given_significant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelSpec,
    pub variables: Vec<VariableSummary>,
    pub mean_adj_r2: f64,
    pub contracts_used: usize,
    pub contracts_failed: usize,
}

impl ModelSummary {
    pub fn variable(&self, p: Predictor) -> Option<&VariableSummary> {
        self.variables.iter().find(|v| v.predictor == p)
    }
}

pub fn summarize(
    results: &[ContractResult],
    model: ModelSpec,
    alpha: f64,
) -> Result<ModelSummary, AnalysisError> {
    check_alpha(alpha, true)?;
    let fits: Vec<&RegressionFit> = results
        .iter()
        .filter_map(|r| r.fits.get(&model).and_then(FitOutcome::fit))
        .collect();
    if fits.is_empty() {
        return Err(AnalysisError::EmptySummary { model });
    }
    let used = fits.len();
    let variables = model
        .predictors()
        .map(|p| {
            let (mut significant, mut negative) = (0usize, 0usize);
            for fit in &fits {
                let term = fit.term(p).expect("model term present in its own fit");
                if term.p_value < alpha {
                    significant += 1;
                    if term.estimate < 0.0 {
                        negative += 1;
                    }
                }
            }
            VariableSummary {
                predictor: p,
                significant,
                significant_negative: negative,
                pct_significant: 100.0 * significant as f64 / used as f64,
                pct_negative_given_significant: (significant > 0)
                    .then(|| 100.0 * negative as f64 / significant as f64),
            }
        })
        .collect();
    let mean_adj_r2 = fits.iter().map(|f| f.adj_r2).sum::<f64>() / used as f64;
    Ok(ModelSummary {
        model,
        variables,
        mean_adj_r2,
        contracts_used: used,
        contracts_failed: results.len() - used,
    })
}

/// Model with the highest mean adjusted R². Ties go to the model with fewer
/// predictors, then to the canonically earlier one.
pub fn select_best(summaries: &[ModelSummary]) -> Result<ModelSpec, AnalysisError> {
    summaries
        .iter()
        .max_by(|a, b| {
            a.mean_adj_r2
                .total_cmp(&b.mean_adj_r2)
                .then_with(|| b.model.cmp(&a.model))
        })
        .map(|s| s.model)
        .ok_or(AnalysisError::NoSummaries)
}

/// Model comparison for one asset and dependent variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub asset: AssetId,
    pub dependent: DependentKind,
    pub alpha: f64,
    pub contracts: usize,
    pub summaries: Vec<ModelSummary>,
    pub best: ModelSpec,
}

/// Summarizes every model that has at least one successful fit and picks
/// the best one.
pub fn compare(
    asset: AssetId,
    dependent: DependentKind,
    results: &[ContractResult],
    models: &[ModelSpec],
    alpha: f64,
) -> Result<ComparisonReport, AnalysisError> {
    let mut summaries = Vec::with_capacity(models.len());
    for &model in models {
        match summarize(results, model, alpha) {
            Ok(s) => summaries.push(s),
            Err(AnalysisError::EmptySummary { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let best = select_best(&summaries)?;
    Ok(ComparisonReport {
        asset,
        dependent,
        alpha,
        contracts: results.len(),
        summaries,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::TermEstimate;

    fn fake_fit(model: ModelSpec, coefs: &[(f64, f64)], adj_r2: f64) -> RegressionFit {
        let mut terms = vec![TermEstimate {
            term: "intercept".into(),
            estimate: 1.0,
            std_error: 1.0,
            t_stat: 1.0,
            p_value: 0.3,
        }];
        for (p, &(estimate, p_value)) in model.predictors().zip(coefs) {
            terms.push(TermEstimate {
                term: p.symbol().into(),
                estimate,
                std_error: 1.0,
                t_stat: estimate,
                p_value,
            });
        }
        RegressionFit {
            model,
            n: 42,
            terms,
            r2: adj_r2,
            adj_r2,
            residual_df: 40,
            residuals: vec![],
        }
    }

    fn result(month: u32, model: ModelSpec, outcome: FitOutcome) -> ContractResult {
        ContractResult {
            asset: AssetId::Bitcoin,
            contract_month: ContractMonth::new(2018, month).unwrap(),
            n_rows: 42,
            fits: BTreeMap::from([(model, outcome)]),
        }
    }

    fn summary(model: &str, adj: f64) -> ModelSummary {
        ModelSummary {
            model: model.parse().unwrap(),
            variables: vec![],
            mean_adj_r2: adj,
            contracts_used: 1,
            contracts_failed: 0,
        }
    }

    #[test]
    fn enumerates_seven_models() {
        let all = enumerate_models(&Predictor::ALL);
        let labels: Vec<String> = all.iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["m", "v", "o", "mv", "mo", "vo", "mvo"]);
        assert_eq!(
            enumerate_models(&[Predictor::Maturity]),
            vec!["m".parse().unwrap()]
        );
        assert!(enumerate_models(&[]).is_empty());
    }

    #[test]
    fn summarize_arithmetic() {
        let m: ModelSpec = "m".parse().unwrap();
        let results = vec![
            result(3, m, FitOutcome::Fit(fake_fit(m, &[(0.5, 0.01)], 0.2))),
            result(6, m, FitOutcome::Fit(fake_fit(m, &[(-0.5, 0.02)], 0.3))),
            result(9, m, FitOutcome::Fit(fake_fit(m, &[(0.1, 0.9)], 0.4))),
            result(
                12,
                m,
                FitOutcome::Failed(FitFailure {
                    kind: FailureKind::InsufficientData,
                    message: String::new(),
                }),
            ),
        ];
        let s = summarize(&results[..2], m, 0.10).unwrap();
        let var = s.variable(Predictor::Maturity).unwrap();
        assert_eq!(var.pct_significant, 100.0);
        assert_eq!(var.pct_negative_given_significant, Some(50.0));

        let s = summarize(&results, m, 0.10).unwrap();
        assert!((s.mean_adj_r2 - 0.3).abs() < 1e-15);
        assert_eq!(s.contracts_used, 3);
        assert_eq!(s.contracts_failed, 1);
        let var = s.variable(Predictor::Maturity).unwrap();
        assert!((var.pct_significant - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_negative_share() {
        let o: ModelSpec = "o".parse().unwrap();
        let results = vec![result(3, o, FitOutcome::Fit(fake_fit(o, &[(-1.0, 0.5)], 0.1)))];
        let s = summarize(&results, o, 0.10).unwrap();
        let var = s.variable(Predictor::OpenInterest).unwrap();
        assert_eq!(var.pct_significant, 0.0);
        assert_eq!(var.pct_negative_given_significant, None);
    }

    #[test]
    fn summarize_without_fits() {
        let m: ModelSpec = "m".parse().unwrap();
        assert!(matches!(
            summarize(&[], m, 0.1),
            Err(AnalysisError::EmptySummary { .. })
        ));
        assert!(summarize(&[], m, 0.0).is_err());
    }

    #[test]
    fn select_best_cases() {
        let s = [summary("m", 0.031), summary("mv", 0.254), summary("mvo", 0.280)];
        assert_eq!(select_best(&s).unwrap().label(), "mvo");
        let tie = [summary("mvo", 0.25), summary("mv", 0.25)];
        assert_eq!(select_best(&tie).unwrap().label(), "mv");
        let tie = [summary("vo", 0.25), summary("mv", 0.25)];
        assert_eq!(select_best(&tie).unwrap().label(), "mv");
        assert_eq!(select_best(&[summary("o", -0.1)]).unwrap().label(), "o");
        assert!(matches!(select_best(&[]), Err(AnalysisError::NoSummaries)));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            run_contract_by_contract(&[], &[ModelSpec::full()], 0.1),
            Err(AnalysisError::EmptyAnalysis)
        ));
        assert!(matches!(
            run_contract_by_contract(&[], &[ModelSpec::full()], 1.0),
            Err(AnalysisError::InvalidAlpha { .. })
        ));
    }
}
