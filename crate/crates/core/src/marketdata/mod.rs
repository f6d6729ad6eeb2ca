//! Futures contract chains and spot series: data model, validation,
//! windowing and the maturity counter.
//!
//! A [`ContractSeries`] holds one monthly contract's daily bars. Contracts
//! expire on the last Friday of their contract month unless the input
//! overrides the date (exchange holidays). Bars dated after expiry are data
//! errors and are rejected when the series is constructed.

mod calendar;
mod csv_io;

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calendar::{is_weekday, last_friday, next_weekday, weekdays_ending_at};
pub use csv_io::{
    parse_contract_csv, parse_spot_csv, parse_spot_csv_all, write_contract_csv, write_spot_csv,
    CONTRACT_HEADER, CONTRACT_HEADER_WITH_EXPIRY, SPOT_HEADER,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the input file.
    pub line: u64,
    pub kind: RowErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowErrorKind {
    Field {
        column: String,
        value: String,
        reason: String,
    },
    Duplicate {
        asset: AssetId,
        contract: ContractMonth,
        date: NaiveDate,
    },
    FieldCount {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RowErrorKind::Field {
                column,
                value,
                reason,
            } => write!(
                f,
                "line {}: column `{}` value {:?}: {}",
                self.line, column, value, reason
            ),
            RowErrorKind::Duplicate {
                asset,
                contract,
                date,
            } => write!(
                f,
                "line {}: duplicate row for {} {} on {}",
                self.line, asset, contract, date
            ),
            RowErrorKind::FieldCount { expected, found } => write!(
                f,
                "line {}: expected {} fields, found {}",
                self.line, expected, found
            ),
        }
    }
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("{} malformed row(s): {}", .0.len(), join_rows(.0))]
    Rows(Vec<RowError>),
    #[error("{asset} spot dates out of order at line {line}: {date} does not follow {previous}")]
    Ordering {
        asset: AssetId,
        line: u64,
        date: NaiveDate,
        previous: NaiveDate,
    },
    #[error("bars for {asset} {contract} not strictly increasing at {date}")]
    UnsortedBars {
        asset: AssetId,
        contract: ContractMonth,
        date: NaiveDate,
    },
    #[error("bar dated {date} is after expiry {expiry} of {asset} {contract}")]
    BarAfterExpiry {
        asset: AssetId,
        contract: ContractMonth,
        date: NaiveDate,
        expiry: NaiveDate,
    },
    #[error("invalid bar on {date}: {reason}")]
    InvalidBar { date: NaiveDate, reason: String },
    #[error("invalid contract month {year}-{month}")]
    InvalidContractMonth { year: i32, month: u32 },
    #[error("{date} is not a bar date of {contract}")]
    DateNotInSeries {
        contract: ContractMonth,
        date: NaiveDate,
    },
    #[error("{date} is after expiry {expiry}")]
    AfterExpiry { date: NaiveDate, expiry: NaiveDate },
    #[error("window must be at least one trading day")]
    InvalidWindow,
    #[error("series for {contract} has no bars")]
    EmptySeries { contract: ContractMonth },
    #[error("asset mismatch: contract is {contract}, spot is {spot}")]
    AssetMismatch { contract: AssetId, spot: AssetId },
    #[error("no overlapping dates between {contract} and the {asset} spot series")]
    EmptyJoin {
        asset: AssetId,
        contract: ContractMonth,
    },
    #[error("spot input has no rows")]
    EmptySpot,
    #[error("spot input mixes assets: {0:?}")]
    MixedAssets(Vec<AssetId>),
    #[error("asset name is empty")]
    EmptyAsset,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// The underlying asset of a contract chain.
///
/// Known assets carry a default scaling convention; anything else is kept
/// verbatim as a custom label. Ordering is bitcoin, gold, oil, then custom
/// labels alphabetically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AssetId {
    Bitcoin,
    Gold,
    Oil,
    Custom(String),
}

impl AssetId {
    pub fn as_str(&self) -> &str {
        match self {
            AssetId::Bitcoin => "bitcoin",
            AssetId::Gold => "gold",
            AssetId::Oil => "oil",
            AssetId::Custom(name) => name,
        }
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssetId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(IngestError::EmptyAsset);
        }
        Ok(match trimmed.to_ascii_lowercase().as_str() {
            "bitcoin" | "btc" => AssetId::Bitcoin,
            "gold" => AssetId::Gold,
            "oil" | "crude" | "crude oil" => AssetId::Oil,
            _ => AssetId::Custom(trimmed.to_string()),
        })
    }
}

impl TryFrom<String> for AssetId {
    type Error = IngestError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<AssetId> for String {
    fn from(value: AssetId) -> Self {
        value.as_str().to_string()
    }
}

/// Delivery month of a contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContractMonth {
    pub year: i32,
    pub month: u32,
}

impl ContractMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, IngestError> {
        if !(1..=12).contains(&month) || NaiveDate::from_ymd_opt(year, month, 1).is_none() {
            return Err(IngestError::InvalidContractMonth { year, month });
        }
        Ok(ContractMonth { year, month })
    }

    pub fn expiry(&self) -> NaiveDate {
        last_friday(self.year, self.month).expect("validated contract month")
    }

    pub fn succ(&self) -> ContractMonth {
        if self.month == 12 {
            ContractMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            ContractMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Short label such as `Mar-18`.
    pub fn short_label(&self) -> String {
        let date = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated month");
        format!("{}-{:02}", date.format("%b"), self.year.rem_euclid(100))
    }
}

impl fmt::Display for ContractMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for ContractMonth {
    type Err = String;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected YYYY-MM, got `{s}`");
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        ContractMonth::new(year, month).map_err(|e| e.to_string())
    }
}

/// One trading day of a futures contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyBar {
    pub date: NaiveDate,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub open_interest: f64,
}

impl DailyBar {
    /// True when the high or low is not a positive price. Such bars are kept
    /// at ingest but cannot produce a range volatility.
    pub fn has_non_positive_range(&self) -> bool {
        self.high <= 0.0 || self.low <= 0.0
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let invalid = |reason: &str| IngestError::InvalidBar {
            date: self.date,
            reason: reason.to_string(),
        };
        if ![self.high, self.low, self.close].iter().all(|p| p.is_finite()) {
            return Err(invalid("prices must be finite"));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(invalid("volume must be a non-negative number"));
        }
        if !(self.open_interest.is_finite() && self.open_interest >= 0.0) {
            return Err(invalid("open interest must be a non-negative number"));
        }
        if self.high > 0.0 && self.low > 0.0 && self.low > self.high {
            return Err(invalid("low exceeds high"));
        }
        Ok(())
    }
}

/// Daily bars of one contract plus its expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSeries {
    pub asset: AssetId,
    pub contract_month: ContractMonth,
    pub expiry: NaiveDate,
    bars: Vec<DailyBar>,
}

impl ContractSeries {
    /// Builds a validated series. `expiry` defaults to the last Friday of the
    /// contract month; bars must be strictly increasing and none may fall
    /// after expiry.
    pub fn new(
        asset: AssetId,
        contract_month: ContractMonth,
        expiry: Option<NaiveDate>,
        bars: Vec<DailyBar>,
    ) -> Result<Self, IngestError> {
        let expiry = expiry.unwrap_or_else(|| contract_month.expiry());
        for bar in &bars {
            bar.validate()?;
        }
        for pair in bars.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(IngestError::UnsortedBars {
                    asset,
                    contract: contract_month,
                    date: pair[1].date,
                });
            }
        }
        if let Some(last) = bars.last() {
            if last.date > expiry {
                // report the first offending bar
                let first = bars.iter().find(|b| b.date > expiry).unwrap_or(last);
                return Err(IngestError::BarAfterExpiry {
                    asset,
                    contract: contract_month,
                    date: first.date,
                    expiry,
                });
            }
        }
        Ok(ContractSeries {
            asset,
            contract_month,
            expiry,
            bars,
        })
    }

    pub fn bars(&self) -> &[DailyBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Whether the expiry differs from the calendar default.
    pub fn has_expiry_override(&self) -> bool {
        self.expiry != self.contract_month.expiry()
    }

    /// Bars whose high or low is not positive.
    pub fn flagged_bars(&self) -> impl Iterator<Item = &DailyBar> {
        self.bars.iter().filter(|b| b.has_non_positive_range())
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }
}

/// Daily spot closing prices of one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotSeries {
    pub asset: AssetId,
    points: Vec<(NaiveDate, f64)>,
}

impl SpotSeries {
    /// Dates must be strictly increasing and prices finite. Negative prices
    /// are valid (oil traded below zero in April 2020).
    pub fn new(asset: AssetId, points: Vec<(NaiveDate, f64)>) -> Result<Self, IngestError> {
        for (i, pair) in points.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(IngestError::Ordering {
                    asset,
                    line: i as u64 + 2,
                    date: pair[1].0,
                    previous: pair[0].0,
                });
            }
        }
        if let Some((date, _)) = points.iter().find(|(_, p)| !p.is_finite()) {
            return Err(IngestError::InvalidBar {
                date: *date,
                reason: "spot price must be finite".into(),
            });
        }
        Ok(SpotSeries { asset, points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn price_on(&self, date: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.points[i].1)
    }
}

/// One regression observation, already scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub date: NaiveDate,
    /// Dependent value (volatility or basis) times the dv factor.
    pub dv: f64,
    /// Trading days remaining until expiry.
    pub m: u32,
    pub v: f64,
    pub o: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NonPositivePrice,
    ZeroFuturesPrice,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::NonPositivePrice => "non-positive price",
            DropReason::ZeroFuturesPrice => "zero futures price",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub date: NaiveDate,
    pub reason: DropReason,
}

/// Aligned regression inputs for one contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPanel {
    pub asset: AssetId,
    pub contract_month: ContractMonth,
    pub rows: Vec<ObservationRow>,
    pub dropped: Vec<DroppedRow>,
    /// Contract bars without a same-day spot price (basis panels only).
    pub unmatched_spot: usize,
}

impl ObservationPanel {
    pub fn dropped_rows(&self) -> usize {
        self.dropped.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Trading days in `series` strictly after `date`, up to and including
/// expiry. Zero on the final bar.
pub fn maturity_counter(series: &ContractSeries, date: NaiveDate) -> Result<u32, IngestError> {
    if date > series.expiry {
        return Err(IngestError::AfterExpiry {
            date,
            expiry: series.expiry,
        });
    }
    let pos = series
        .position(date)
        .ok_or(IngestError::DateNotInSeries {
            contract: series.contract_month,
            date,
        })?;
    let remaining = series.bars[pos + 1..]
        .iter()
        .take_while(|b| b.date <= series.expiry)
        .count();
    Ok(remaining as u32)
}

/// Keeps the final `window_days` bars ending at the last bar on or before
/// expiry.
pub fn window_last_n(
    series: &ContractSeries,
    window_days: usize,
) -> Result<ContractSeries, IngestError> {
    if window_days == 0 {
        return Err(IngestError::InvalidWindow);
    }
    if series.is_empty() {
        return Err(IngestError::EmptySeries {
            contract: series.contract_month,
        });
    }
    let end = series.bars.partition_point(|b| b.date <= series.expiry);
    let start = end.saturating_sub(window_days);
    Ok(ContractSeries {
        asset: series.asset.clone(),
        contract_month: series.contract_month,
        expiry: series.expiry,
        bars: series.bars[start..end].to_vec(),
    })
}

/// Inner join of contract bars and spot prices on date.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotAlignment {
    pub pairs: Vec<(DailyBar, f64)>,
    /// Contract bars that had no spot price on the same date.
    pub dropped: usize,
}

pub fn align_with_spot(
    series: &ContractSeries,
    spot: &SpotSeries,
) -> Result<SpotAlignment, IngestError> {
    if series.asset != spot.asset {
        return Err(IngestError::AssetMismatch {
            contract: series.asset.clone(),
            spot: spot.asset.clone(),
        });
    }
    let pairs: Vec<(DailyBar, f64)> = series
        .bars
        .iter()
        .filter_map(|bar| spot.price_on(bar.date).map(|p| (*bar, p)))
        .collect();
    if pairs.is_empty() {
        return Err(IngestError::EmptyJoin {
            asset: series.asset.clone(),
            contract: series.contract_month,
        });
    }
    Ok(SpotAlignment {
        dropped: series.len() - pairs.len(),
        pairs,
    })
}

/// Year and month of a date as a contract month.
pub fn month_of(date: NaiveDate) -> ContractMonth {
    ContractMonth {
        year: date.year(),
        month: date.month(),
    }
}
