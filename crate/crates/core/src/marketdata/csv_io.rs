//! Contract and spot CSV formats.
//!
//! ```text
//! asset,contract_year,contract_month,date,high,low,close,volume,open_interest[,expiry_override]
//! asset,date,price
//! ```
//!
//! Comma separated, `.` decimal point, ISO-8601 dates, header required.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim};

use super::{
    AssetId, ContractMonth, ContractSeries, DailyBar, IngestError, RowError, RowErrorKind,
    SpotSeries,
};

pub const CONTRACT_HEADER: &str =
    "asset,contract_year,contract_month,date,high,low,close,volume,open_interest";
pub const CONTRACT_HEADER_WITH_EXPIRY: &str =
    "asset,contract_year,contract_month,date,high,low,close,volume,open_interest,expiry_override";
pub const SPOT_HEADER: &str = "asset,date,price";

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(bytes)
}

fn header_line(rec: &StringRecord) -> String {
    rec.iter().collect::<Vec<_>>().join(",")
}

struct RowParser<'a> {
    record: &'a StringRecord,
    names: &'a [&'a str],
    line: u64,
    errors: Vec<RowError>,
}

impl<'a> RowParser<'a> {
    fn raw(&self, idx: usize) -> &'a str {
        self.record.get(idx).unwrap_or("")
    }

    fn fail(&mut self, idx: usize, reason: &str) {
        self.errors.push(RowError {
            line: self.line,
            kind: RowErrorKind::Field {
                column: self.names[idx].to_string(),
                value: self.raw(idx).to_string(),
                reason: reason.to_string(),
            },
        });
    }

    fn asset(&mut self, idx: usize) -> Option<AssetId> {
        match self.raw(idx).parse::<AssetId>() {
            Ok(a) => Some(a),
            Err(_) => {
                self.fail(idx, "empty asset");
                None
            }
        }
    }

    fn date(&mut self, idx: usize) -> Option<NaiveDate> {
        match NaiveDate::parse_from_str(self.raw(idx), "%Y-%m-%d") {
            Ok(d) => Some(d),
            Err(_) => {
                self.fail(idx, "expected an ISO-8601 date");
                None
            }
        }
    }

    fn number(&mut self, idx: usize) -> Option<f64> {
        let raw = self.raw(idx);
        if raw.is_empty() {
            self.fail(idx, "missing value");
            return None;
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.fail(idx, "expected a finite number");
                None
            }
        }
    }

    fn non_negative(&mut self, idx: usize) -> Option<f64> {
        let v = self.number(idx)?;
        if v < 0.0 {
            self.fail(idx, "must be non-negative");
            return None;
        }
        Some(v)
    }

    fn integer<T: std::str::FromStr>(&mut self, idx: usize) -> Option<T> {
        match self.raw(idx).parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(idx, "expected an integer");
                None
            }
        }
    }
}

struct ContractAccumulator {
    bars: BTreeMap<NaiveDate, DailyBar>,
    expiry: Option<NaiveDate>,
}

/// Parses a contract CSV into one [`ContractSeries`] per (asset, contract
/// month), sorted by asset then month. Every malformed row is reported; none
/// is skipped silently.
pub fn parse_contract_csv(bytes: &[u8]) -> Result<Vec<ContractSeries>, IngestError> {
    let mut rdr = reader(bytes);
    let header = rdr.headers()?.clone();
    let found = header_line(&header);
    let with_expiry = if found == CONTRACT_HEADER {
        false
    } else if found == CONTRACT_HEADER_WITH_EXPIRY {
        true
    } else {
        return Err(IngestError::Header {
            expected: CONTRACT_HEADER.to_string(),
            found,
        });
    };
    let names: Vec<&str> = CONTRACT_HEADER_WITH_EXPIRY.split(',').collect();
    let width = if with_expiry { 10 } else { 9 };

    let mut groups: BTreeMap<(AssetId, ContractMonth), ContractAccumulator> = BTreeMap::new();
    let mut errors = Vec::new();

    for result in rdr.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != width {
            errors.push(RowError {
                line,
                kind: RowErrorKind::FieldCount {
                    expected: width,
                    found: record.len(),
                },
            });
            continue;
        }
        let mut p = RowParser {
            record: &record,
            names: &names,
            line,
            errors: Vec::new(),
        };
        let asset = p.asset(0);
        let year = p.integer::<i32>(1);
        let month = p.integer::<u32>(2).and_then(|m| {
            if (1..=12).contains(&m) {
                Some(m)
            } else {
                p.fail(2, "month must be in 1..=12");
                None
            }
        });
        let date = p.date(3);
        let high = p.number(4);
        let low = p.number(5);
        let close = p.number(6);
        let volume = p.non_negative(7);
        let open_interest = p.non_negative(8);
        let expiry = if with_expiry && !p.raw(9).is_empty() {
            p.date(9).map(Some)
        } else {
            Some(None)
        };
        if let (Some(h), Some(l)) = (high, low) {
            if h > 0.0 && l > 0.0 && l > h {
                p.fail(5, "low exceeds high");
            }
        }
        let parsed_ok = p.errors.is_empty();
        errors.append(&mut p.errors);
        if !parsed_ok {
            continue;
        }
        let (
            Some(asset),
            Some(year),
            Some(month),
            Some(date),
            Some(high),
            Some(low),
            Some(close),
            Some(volume),
            Some(open_interest),
            Some(expiry),
        ) = (
            asset,
            year,
            month,
            date,
            high,
            low,
            close,
            volume,
            open_interest,
            expiry,
        )
        else {
            continue;
        };
        let contract = match ContractMonth::new(year, month) {
            Ok(c) => c,
            Err(_) => {
                errors.push(RowError {
                    line,
                    kind: RowErrorKind::Field {
                        column: "contract_year".into(),
                        value: year.to_string(),
                        reason: "year out of range".into(),
                    },
                });
                continue;
            }
        };
        let acc = groups
            .entry((asset.clone(), contract))
            .or_insert_with(|| ContractAccumulator {
                bars: BTreeMap::new(),
                expiry: None,
            });
        if let Some(exp) = expiry {
            match acc.expiry {
                Some(prev) if prev != exp => {
                    errors.push(RowError {
                        line,
                        kind: RowErrorKind::Field {
                            column: "expiry_override".into(),
                            value: exp.to_string(),
                            reason: format!("conflicts with earlier override {prev}"),
                        },
                    });
                    continue;
                }
                _ => acc.expiry = Some(exp),
            }
        }
        let bar = DailyBar {
            date,
            high,
            low,
            close,
            volume,
            open_interest,
        };
        if acc.bars.insert(date, bar).is_some() {
            errors.push(RowError {
                line,
                kind: RowErrorKind::Duplicate {
                    asset,
                    contract,
                    date,
                },
            });
        }
    }

    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }

    groups
        .into_iter()
        .map(|((asset, contract), acc)| {
            ContractSeries::new(asset, contract, acc.expiry, acc.bars.into_values().collect())
        })
        .collect()
}

/// Parses a spot CSV that may contain several assets; one series per asset
/// in asset order. Dates must be strictly increasing within each asset in
/// file order.
pub fn parse_spot_csv_all(bytes: &[u8]) -> Result<Vec<SpotSeries>, IngestError> {
    let mut rdr = reader(bytes);
    let header = rdr.headers()?.clone();
    let found = header_line(&header);
    if found != SPOT_HEADER {
        return Err(IngestError::Header {
            expected: SPOT_HEADER.to_string(),
            found,
        });
    }
    let names: Vec<&str> = SPOT_HEADER.split(',').collect();
    let mut groups: BTreeMap<AssetId, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    let mut errors = Vec::new();

    for result in rdr.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            errors.push(RowError {
                line,
                kind: RowErrorKind::FieldCount {
                    expected: 3,
                    found: record.len(),
                },
            });
            continue;
        }
        let mut p = RowParser {
            record: &record,
            names: &names,
            line,
            errors: Vec::new(),
        };
        let asset = p.asset(0);
        let date = p.date(1);
        let price = p.number(2);
        errors.append(&mut p.errors);
        let (Some(asset), Some(date), Some(price)) = (asset, date, price) else {
            continue;
        };
        let points = groups.entry(asset.clone()).or_default();
        if let Some(&(previous, _)) = points.last() {
            if date <= previous {
                return Err(IngestError::Ordering {
                    asset,
                    line,
                    date,
                    previous,
                });
            }
        }
        points.push((date, price));
    }
    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }
    groups
        .into_iter()
        .map(|(asset, points)| SpotSeries::new(asset, points))
        .collect()
}

/// Parses a single-asset spot CSV.
pub fn parse_spot_csv(bytes: &[u8]) -> Result<SpotSeries, IngestError> {
    let mut all = parse_spot_csv_all(bytes)?;
    match all.len() {
        0 => Err(IngestError::EmptySpot),
        1 => Ok(all.remove(0)),
        _ => Err(IngestError::MixedAssets(
            all.into_iter().map(|s| s.asset).collect(),
        )),
    }
}

/// Writes contracts in the contract CSV format. The expiry column is emitted
/// only when some contract overrides its calendar expiry.
pub fn write_contract_csv(series: &[ContractSeries]) -> String {
    let with_expiry = series.iter().any(ContractSeries::has_expiry_override);
    let mut out = String::new();
    out.push_str(if with_expiry {
        CONTRACT_HEADER_WITH_EXPIRY
    } else {
        CONTRACT_HEADER
    });
    out.push('\n');
    for s in series {
        for b in s.bars() {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.asset,
                s.contract_month.year,
                s.contract_month.month,
                b.date,
                b.high,
                b.low,
                b.close,
                b.volume,
                b.open_interest
            );
            if with_expiry {
                out.push(',');
                if s.has_expiry_override() {
                    let _ = write!(out, "{}", s.expiry);
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_spot_csv(series: &[SpotSeries]) -> String {
    let mut out = String::from(SPOT_HEADER);
    out.push('\n');
    for s in series {
        for (date, price) in s.points() {
            let _ = writeln!(out, "{},{},{}", s.asset, date, price);
        }
    }
    out
}
