//! Rendering of descriptive statistics, model comparisons and per-contract
//! coefficient tables as markdown, CSV or JSON, plus plot-ready panel
//! exports and the run manifest.
//!
//! Markdown rounds every number half-to-even at the precision configured for
//! its column. CSV and JSON carry full precision: both print the shortest
//! decimal that round-trips to the same `f64`, so the two formats hold
//! identical values. Undefined numbers are `-` in markdown, an empty field in
//! CSV and `null` in JSON.

mod manifest;
mod number;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use manifest::{sha256_hex, write_run_manifest, EstimatorConventions, InputDigest, RunManifest};
pub use number::{format_fixed, round_half_even};

use crate::analysis::{ComparisonReport, ContractResult, FitOutcome};
use crate::marketdata::{window_last_n, AssetId, ContractSeries, ObservationPanel, SpotSeries};
use crate::regress::{significance_stars, ModelSpec, Predictor};
use crate::stats::{describe, DescriptiveStats};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to render: {0}")]
    Empty(&'static str),
    #[error("model {model} was not fitted for any contract")]
    ModelNotFitted { model: ModelSpec },
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Markdown => "markdown",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Column families with their own markdown precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    /// Significance percentages in the comparison table.
    Percent,
    AdjR2,
    Coefficient,
    PValue,
    /// Cells of the descriptive statistics table.
    Statistic,
}

impl Column {
    pub fn default_decimals(self) -> usize {
        match self {
            Column::Percent => 1,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub format: Format,
    /// Percentages strictly above this are bolded in markdown.
    pub bold_threshold: f64,
    /// Overrides of [`Column::default_decimals`].
    pub decimals: BTreeMap<Column, usize>,
    /// Whether the caller should emit a run manifest next to the output.
    pub include_manifest: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: Format::Markdown,
            bold_threshold: 50.0,
            decimals: BTreeMap::new(),
            include_manifest: false,
        }
    }
}

impl RenderOptions {
    pub fn with_format(format: Format) -> Self {
        RenderOptions {
            format,
            ..Default::default()
        }
    }

    pub fn decimals_for(&self, column: Column) -> usize {
        self.decimals
            .get(&column)
            .copied()
            .unwrap_or_else(|| column.default_decimals())
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if !self.bold_threshold.is_finite() {
            return Err(ReportError::InvalidOptions(
                "bold threshold must be finite".into(),
            ));
        }
        if let Some((col, d)) = self.decimals.iter().find(|(_, d)| **d > 17) {
            return Err(ReportError::InvalidOptions(format!(
                "{d} decimals for {col:?} exceeds 17"
            )));
        }
        Ok(())
    }

    fn fixed(&self, column: Column, value: f64) -> String {
        format_fixed(value, self.decimals_for(column))
    }
}

/// What a descriptive statistics column describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesRole {
    Spot,
    Futures,
    Volume,
    OpenInterest,
}

impl SeriesRole {
    pub fn label(self) -> &'static str {
        match self {
            SeriesRole::Spot => "spot",
            SeriesRole::Futures => "futures",
            SeriesRole::Volume => "volume",
            SeriesRole::OpenInterest => "open interest",
        }
    }
}

fn full(value: f64) -> String {
    if value.is_finite() {
        format!("{value}")
    } else {
        String::new()
    }
}

fn full_opt(value: Option<f64>) -> String {
    value.map(full).unwrap_or_default()
}

fn csv_string(rows: &[Vec<String>]) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits the utf-8 it was given"))
}

fn json_string(value: &serde_json::Value) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn markdown_table(header: &[String], align_right_from: usize, rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    let rule: Vec<&str> = (0..header.len())
        .map(|i| if i < align_right_from { "---" } else { "---:" })
        .collect();
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for row in rows {
        out.push('|');
        for cell in row {
            if cell.is_empty() {
                out.push_str(" |");
            } else {
                out.push_str(&format!(" {cell} |"));
            }
        }
        out.push('\n');
    }
    out
}

const STAT_ROWS: [&str; 7] = [
    "Mean",
    "Median",
    "Maximum",
    "Minimum",
    "Std Dev.",
    "Skewness",
    "Kurtosis",
];

fn stat_values(s: &DescriptiveStats) -> [Option<f64>; 7] {
    [
        Some(s.mean),
        Some(s.median),
        Some(s.maximum),
        Some(s.minimum),
        Some(s.std_dev),
        s.skewness,
        s.kurtosis,
    ]
}

/// Descriptive statistics with one column per (asset, role).
///
/// JSON layout: `{"columns": [{"asset", "role", "n", "mean", "median",
/// "maximum", "minimum", "std_dev", "skewness", "kurtosis"}]}` where
/// skewness and kurtosis are `null` for constant series.
pub fn render_descriptives(
    stats: &BTreeMap<(AssetId, SeriesRole), DescriptiveStats>,
    opts: &RenderOptions,
) -> Result<String, ReportError> {
    opts.validate()?;
    if stats.is_empty() {
        return Err(ReportError::Empty("descriptive statistics"));
    }
    match opts.format {
        Format::Markdown => {
            let mut header = vec!["Statistic".to_string()];
            header.extend(
                stats
                    .keys()
                    .map(|(asset, role)| format!("{asset} {}", role.label())),
            );
            let columns: Vec<[Option<f64>; 7]> = stats.values().map(stat_values).collect();
            let rows: Vec<Vec<String>> = STAT_ROWS
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let mut row = vec![name.to_string()];
                    row.extend(columns.iter().map(|c| match c[i] {
                        Some(v) => opts.fixed(Column::Statistic, v),
                        None => "-".into(),
                    }));
                    row
                })
                .collect();
            let mut out = markdown_table(&header, 1, &rows);
            let counts: Vec<String> = stats
                .iter()
                .map(|((asset, role), s)| format!("{asset} {}: {}", role.label(), s.n))
                .collect();
            out.push_str(&format!("\nObservations: {}\n", counts.join("; ")));
            Ok(out)
        }
        Format::Csv => {
            let mut rows = vec![vec![
                "asset".to_string(),
                "role".into(),
                "n".into(),
                "mean".into(),
                "median".into(),
                "maximum".into(),
                "minimum".into(),
                "std_dev".into(),
                "skewness".into(),
                "kurtosis".into(),
            ]];
            for ((asset, role), s) in stats {
                let mut row = vec![asset.to_string(), role.label().into(), s.n.to_string()];
                row.extend(stat_values(s).iter().map(|v| full_opt(*v)));
                rows.push(row);
            }
            csv_string(&rows)
        }
        Format::Json => {
            let columns: Vec<serde_json::Value> = stats
                .iter()
                .map(|((asset, role), s)| {
                    json!({
                        "asset": asset,
                        "role": role,
                        "n": s.n,
                        "mean": s.mean,
                        "median": s.median,
                        "maximum": s.maximum,
                        "minimum": s.minimum,
                        "std_dev": s.std_dev,
                        "skewness": s.skewness,
                        "kurtosis": s.kurtosis,
                    })
                })
                .collect();
            json_string(&json!({ "columns": columns }))
        }
    }
}

/// Model comparison table: per model, the share of contracts where each
/// variable is significant, the share of those with a negative coefficient
/// and the mean adjusted R².
pub fn render_comparison(
    report: &ComparisonReport,
    opts: &RenderOptions,
) -> Result<String, ReportError> {
    opts.validate()?;
    if report.summaries.is_empty() {
        return Err(ReportError::Empty("model summaries"));
    }
    match opts.format {
        Format::Markdown => {
            let mut out = format!(
                "Asset: {}; dependent: {}; alpha: {}; contracts: {}\n\n",
                report.asset, report.dependent, report.alpha, report.contracts
            );
            let mut header = vec!["Model".to_string()];
            for p in Predictor::ALL {
                header.push(p.symbol().into());
                header.push("(-)".into());
            }
            header.extend(["Adj. R²".into(), "Used".into(), "Failed".into()]);
            let rows: Vec<Vec<String>> = report
                .summaries
                .iter()
                .map(|s| {
                    let mut row = vec![s.model.label()];
                    for p in Predictor::ALL {
                        match s.variable(p) {
                            Some(v) => {
                                let pct = opts.fixed(Column::Percent, v.pct_significant);
                                row.push(if v.pct_significant > opts.bold_threshold {
                                    format!("**{pct}**")
                                } else {
                                    pct
                                });
                                row.push(match v.pct_negative_given_significant {
                                    Some(neg) => opts.fixed(Column::Percent, neg),
                                    None => "-".into(),
                                });
                            }
                            None => row.extend([String::new(), String::new()]),
                        }
                    }
                    row.push(opts.fixed(Column::AdjR2, s.mean_adj_r2));
                    row.push(s.contracts_used.to_string());
                    row.push(s.contracts_failed.to_string());
                    row
                })
                .collect();
            out.push_str(&markdown_table(&header, 1, &rows));
            out.push_str(&format!(
                "\nBest model: {} (highest mean adjusted R²)\n",
                report.best.label()
            ));
            Ok(out)
        }
        Format::Csv => {
            let mut header = vec!["asset".to_string(), "dependent".into(), "model".into()];
            for p in Predictor::ALL {
                header.push(format!("pct_sig_{}", p.symbol()));
                header.push(format!("pct_neg_{}", p.symbol()));
            }
            header.extend([
                "mean_adj_r2".into(),
                "contracts_used".into(),
                "contracts_failed".into(),
                "best".into(),
            ]);
            let mut rows = vec![header];
            for s in &report.summaries {
                let mut row = vec![
                    report.asset.to_string(),
                    report.dependent.to_string(),
                    s.model.label(),
                ];
                for p in Predictor::ALL {
                    match s.variable(p) {
                        Some(v) => {
                            row.push(full(v.pct_significant));
                            row.push(full_opt(v.pct_negative_given_significant));
                        }
                        None => row.extend([String::new(), String::new()]),
                    }
                }
                row.push(full(s.mean_adj_r2));
                row.push(s.contracts_used.to_string());
                row.push(s.contracts_failed.to_string());
                row.push((s.model == report.best).to_string());
                rows.push(row);
            }
            csv_string(&rows)
        }
        Format::Json => json_string(&serde_json::to_value(report)?),
    }
}

/// Per-contract estimates for one model.
///
/// Markdown puts the coefficient with its significance stars on the
/// contract's row and the p-value in parentheses on the row beneath.
/// Contracts whose fit failed show the failure label instead.
pub fn render_contract_table(
    results: &[ContractResult],
    model: ModelSpec,
    opts: &RenderOptions,
) -> Result<String, ReportError> {
    opts.validate()?;
    if !results.iter().any(|r| r.fits.contains_key(&model)) {
        return Err(ReportError::ModelNotFitted { model });
    }
    let rows_for_model = results
        .iter()
        .filter_map(|r| r.fits.get(&model).map(|outcome| (r, outcome)));
    let predictors: Vec<Predictor> = model.predictors().collect();
    match opts.format {
        Format::Markdown => {
            let mut header = vec!["Contract".to_string()];
            header.extend(predictors.iter().map(|p| p.symbol().to_string()));
            header.push("Adj. R²".into());
            let mut rows = Vec::new();
            for (r, outcome) in rows_for_model {
                let label = r.contract_month.short_label();
                match outcome {
                    FitOutcome::Fit(fit) => {
                        let mut coef_row = vec![label];
                        let mut p_row = vec![String::new()];
                        for &p in &predictors {
                            let term = fit.term(p).expect("fit has every model term");
                            let stars = significance_stars(term.p_value)
                                .map(|s| s.stars())
                                .unwrap_or("");
                            coef_row.push(format!(
                                "{}{stars}",
                                opts.fixed(Column::Coefficient, term.estimate)
                            ));
                            p_row.push(format!("({})", opts.fixed(Column::PValue, term.p_value)));
                        }
                        coef_row.push(opts.fixed(Column::AdjR2, fit.adj_r2));
                        p_row.push(String::new());
                        rows.push(coef_row);
                        rows.push(p_row);
                    }
                    FitOutcome::Failed(failure) => {
                        let mut row = vec![label, failure.kind.label().to_string()];
                        row.extend(std::iter::repeat_n(String::new(), predictors.len()));
                        rows.push(row);
                    }
                }
            }
            let mut out = format!("Model: {}\n\n", model.label());
            out.push_str(&markdown_table(&header, 1, &rows));
            out.push_str(
                "\n***, **, * : significant at the 1%, 5% and 10% levels. \
                 P-values in parentheses.\n",
            );
            Ok(out)
        }
        Format::Csv => {
            let mut rows = vec![[
                "asset",
                "contract",
                "model",
                "status",
                "term",
                "estimate",
                "std_error",
                "t_stat",
                "p_value",
                "stars",
                "adj_r2",
                "n",
            ]
            .map(String::from)
            .to_vec()];
            for (r, outcome) in rows_for_model {
                let base = vec![
                    r.asset.to_string(),
                    r.contract_month.to_string(),
                    model.label(),
                ];
                match outcome {
                    FitOutcome::Fit(fit) => {
                        for term in &fit.terms {
                            let stars = significance_stars(term.p_value)
                                .map(|s| s.stars())
                                .unwrap_or("");
                            let mut row = base.clone();
                            row.extend([
                                "ok".to_string(),
                                term.term.clone(),
                                full(term.estimate),
                                full(term.std_error),
                                full(term.t_stat),
                                full(term.p_value),
                                stars.to_string(),
                                full(fit.adj_r2),
                                fit.n.to_string(),
                            ]);
                            rows.push(row);
                        }
                    }
                    FitOutcome::Failed(failure) => {
                        let mut row = base;
                        row.push(failure.kind.label().to_string());
                        row.extend(std::iter::repeat_n(String::new(), 7));
                        row.push(r.n_rows.to_string());
                        rows.push(row);
                    }
                }
            }
            csv_string(&rows)
        }
        Format::Json => {
            let contracts: Vec<serde_json::Value> = rows_for_model
                .map(|(r, outcome)| {
                    json!({
                        "asset": r.asset,
                        "contract": r.contract_month,
                        "n_rows": r.n_rows,
                        "outcome": outcome,
                    })
                })
                .collect();
            json_string(&json!({ "model": model, "contracts": contracts }))
        }
    }
}

/// Plot-ready observation rows of one panel: `date,m,dv,v,o`, oldest first,
/// at full precision.
pub fn render_panel_csv(panel: &ObservationPanel) -> Result<String, ReportError> {
    let mut rows = vec![["date", "m", "dv", "v", "o"].map(String::from).to_vec()];
    for row in &panel.rows {
        rows.push(vec![
            row.date.to_string(),
            row.m.to_string(),
            full(row.dv),
            full(row.v),
            full(row.o),
        ]);
    }
    csv_string(&rows)
}

/// Inputs for the descriptive statistics table: futures closes, volume and
/// open interest pooled over each contract's last `window_days` bars, and
/// spot prices on the dates those bars cover. An asset with spot data but
/// no contracts contributes its whole spot series. Volume and open
/// interest are unscaled.
pub fn market_descriptives(
    contracts: &[ContractSeries],
    spots: &[SpotSeries],
    window_days: usize,
) -> Result<BTreeMap<(AssetId, SeriesRole), DescriptiveStats>, crate::Error> {
    let mut pooled: BTreeMap<(AssetId, SeriesRole), Vec<f64>> = BTreeMap::new();
    let mut dates: BTreeMap<AssetId, BTreeSet<NaiveDate>> = BTreeMap::new();
    for series in contracts {
        let window = window_last_n(series, window_days)?;
        let asset = &series.asset;
        for bar in window.bars() {
            for (role, value) in [
                (SeriesRole::Futures, bar.close),
                (SeriesRole::Volume, bar.volume),
                (SeriesRole::OpenInterest, bar.open_interest),
            ] {
                pooled.entry((asset.clone(), role)).or_default().push(value);
            }
            dates.entry(asset.clone()).or_default().insert(bar.date);
        }
    }
    for spot in spots {
        let prices: Vec<f64> = match dates.get(&spot.asset) {
            Some(days) => days.iter().filter_map(|d| spot.price_on(*d)).collect(),
            None => spot.points().iter().map(|(_, p)| *p).collect(),
        };
        if !prices.is_empty() {
            pooled.insert((spot.asset.clone(), SeriesRole::Spot), prices);
        }
    }
    let mut out = BTreeMap::new();
    for (key, values) in pooled {
        out.insert(key, describe(&values)?);
    }
    Ok(out)
}

/// Overview of ingested data: one row per contract and per spot series.
pub fn render_ingest_summary(
    contracts: &[ContractSeries],
    spots: &[SpotSeries],
    opts: &RenderOptions,
) -> Result<String, ReportError> {
    opts.validate()?;
    let span = |first: Option<NaiveDate>, last: Option<NaiveDate>| {
        (
            first.map(|d| d.to_string()).unwrap_or_default(),
            last.map(|d| d.to_string()).unwrap_or_default(),
        )
    };
    let contract_rows: Vec<Vec<String>> = contracts
        .iter()
        .map(|c| {
            let (first, last) = span(
                c.bars().first().map(|b| b.date),
                c.bars().last().map(|b| b.date),
            );
            vec![
                c.asset.to_string(),
                c.contract_month.to_string(),
                c.expiry.to_string(),
                c.has_expiry_override().to_string(),
                c.len().to_string(),
                first,
                last,
                c.flagged_bars().count().to_string(),
            ]
        })
        .collect();
    let spot_rows: Vec<Vec<String>> = spots
        .iter()
        .map(|s| {
            let (first, last) = span(
                s.points().first().map(|p| p.0),
                s.points().last().map(|p| p.0),
            );
            vec![s.asset.to_string(), s.len().to_string(), first, last]
        })
        .collect();
    match opts.format {
        Format::Markdown => {
            let header = [
                "Asset",
                "Contract",
                "Expiry",
                "Override",
                "Bars",
                "First",
                "Last",
                "Flagged",
            ]
            .map(String::from);
            let mut out = markdown_table(&header, 4, &contract_rows);
            if !spot_rows.is_empty() {
                let header = ["Spot asset", "Points", "First", "Last"].map(String::from);
                out.push('\n');
                out.push_str(&markdown_table(&header, 1, &spot_rows));
            }
            Ok(out)
        }
        Format::Csv => {
            let mut rows = vec![[
                "kind", "asset", "contract", "expiry", "expiry_override", "count", "first",
                "last", "flagged",
            ]
            .map(String::from)
            .to_vec()];
            for r in &contract_rows {
                let mut row = vec!["contract".to_string()];
                row.extend(r.iter().cloned());
                rows.push(row);
            }
            for r in &spot_rows {
                rows.push(vec![
                    "spot".into(),
                    r[0].clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    r[1].clone(),
                    r[2].clone(),
                    r[3].clone(),
                    String::new(),
                ]);
            }
            csv_string(&rows)
        }
        Format::Json => {
            let contracts: Vec<serde_json::Value> = contracts
                .iter()
                .zip(&contract_rows)
                .map(|(c, r)| {
                    json!({
                        "asset": c.asset,
                        "contract": c.contract_month,
                        "expiry": c.expiry,
                        "expiry_override": c.has_expiry_override(),
                        "bars": c.len(),
                        "first": r[5],
                        "last": r[6],
                        "flagged": c.flagged_bars().count(),
                    })
                })
                .collect();
            let spots: Vec<serde_json::Value> = spots
                .iter()
                .zip(&spot_rows)
                .map(|(s, r)| {
                    json!({ "asset": s.asset, "points": s.len(), "first": r[2], "last": r[3] })
                })
                .collect();
            json_string(&json!({ "contracts": contracts, "spot": spots }))
        }
    }
}
