//! Dependent variables (range volatility, percentage basis) and the scaling
//! conventions used to turn a contract series into an [`ObservationPanel`].
//!
//! Variables enter the regression in levels. The dependent value is
//! multiplied by `dv_factor` (10,000 by default); volume and open interest
//! are divided by a per-asset activity divisor (10,000 for gold and oil, 1
//! otherwise).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{
    align_with_spot, AssetId, ContractMonth, ContractSeries, DailyBar, DropReason, DroppedRow,
    IngestError, ObservationPanel, ObservationRow, SpotSeries,
};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("range volatility needs positive high and low (high={high}, low={low})")]
    NonPositivePrice { high: f64, low: f64 },
    #[error("low {low} exceeds high {high}")]
    InvertedRange { high: f64, low: f64 },
    #[error("basis is undefined for a zero futures price")]
    ZeroFutures,
    #[error("prices must be finite")]
    NonFinite,
    #[error("panel for {asset} {contract} is empty after dropping rows")]
    EmptyPanel {
        asset: AssetId,
        contract: ContractMonth,
    },
    #[error("basis panels need a spot series")]
    MissingSpot,
    #[error("invalid scaling policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Which dependent variable a run regresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependentKind {
    Volatility,
    Basis,
}

impl DependentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DependentKind::Volatility => "volatility",
            DependentKind::Basis => "basis",
        }
    }
}

impl fmt::Display for DependentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DependentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "volatility" => Ok(DependentKind::Volatility),
            "basis" => Ok(DependentKind::Basis),
            other => Err(format!("unknown dependent variable `{other}`")),
        }
    }
}

/// Multipliers applied when building panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    pub dv_factor: f64,
    /// Per-asset divisor for volume and open interest. Assets not listed use
    /// [`ScalingPolicy::default_divisor`].
    pub activity_divisors: BTreeMap<AssetId, f64>,
}

impl Default for ScalingPolicy {
    fn default() -> Self {
        ScalingPolicy {
            dv_factor: 10_000.0,
            activity_divisors: BTreeMap::new(),
        }
    }
}

impl ScalingPolicy {
    pub fn default_divisor(asset: &AssetId) -> f64 {
        match asset {
            AssetId::Gold | AssetId::Oil => 10_000.0,
            AssetId::Bitcoin | AssetId::Custom(_) => 1.0,
        }
    }

    pub fn activity_divisor(&self, asset: &AssetId) -> f64 {
        self.activity_divisors
            .get(asset)
            .copied()
            .unwrap_or_else(|| Self::default_divisor(asset))
    }

    pub fn with_divisor(mut self, asset: AssetId, divisor: f64) -> Self {
        self.activity_divisors.insert(asset, divisor);
        self
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        if !(self.dv_factor.is_finite() && self.dv_factor > 0.0) {
            return Err(MeasureError::InvalidPolicy(format!(
                "dv_factor must be positive, got {}",
                self.dv_factor
            )));
        }
        for (asset, d) in &self.activity_divisors {
            if !(d.is_finite() && *d > 0.0) {
                return Err(MeasureError::InvalidPolicy(format!(
                    "activity divisor for {asset} must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Parkinson range estimator `(ln H - ln L)^2 / (4 ln 2)` for one day.
pub fn parkinson_volatility(high: f64, low: f64) -> Result<f64, MeasureError> {
    if !(high.is_finite() && low.is_finite()) {
        return Err(MeasureError::NonFinite);
    }
    if high <= 0.0 || low <= 0.0 {
        return Err(MeasureError::NonPositivePrice { high, low });
    }
    if low > high {
        return Err(MeasureError::InvertedRange { high, low });
    }
    let range = high.ln() - low.ln();
    Ok(range * range / (4.0 * std::f64::consts::LN_2))
}

/// Percentage basis `(s - f) / f * 100`.
pub fn basis_pct(spot: f64, futures: f64) -> Result<f64, MeasureError> {
    if !(spot.is_finite() && futures.is_finite()) {
        return Err(MeasureError::NonFinite);
    }
    if futures == 0.0 {
        return Err(MeasureError::ZeroFutures);
    }
    Ok((spot - futures) / futures * 100.0)
}

fn measure(
    kind: DependentKind,
    bar: &DailyBar,
    spot: Option<f64>,
) -> Result<f64, DropReason> {
    match kind {
        DependentKind::Volatility => {
            parkinson_volatility(bar.high, bar.low).map_err(|_| DropReason::NonPositivePrice)
        }
        DependentKind::Basis => {
            let s = spot.expect("basis candidates carry a spot price");
            basis_pct(s, bar.close).map_err(|_| DropReason::ZeroFuturesPrice)
        }
    }
}

/// Builds the regression panel for one contract.
///
/// For basis panels the contract bars are first joined with same-day spot
/// closes. The last `window_days` available bars are kept, the maturity
/// counter is taken from the contract's own bar sequence, and rows whose
/// measure is undefined are dropped and recorded.
pub fn build_panel(
    series: &ContractSeries,
    spot: Option<&SpotSeries>,
    kind: DependentKind,
    policy: &ScalingPolicy,
    window_days: usize,
) -> Result<ObservationPanel, MeasureError> {
    policy.validate()?;
    if window_days == 0 {
        return Err(IngestError::InvalidWindow.into());
    }
    let bars = series.bars();
    // (index into the full bar sequence, spot price)
    let mut candidates: Vec<(usize, Option<f64>)> = match kind {
        DependentKind::Volatility => (0..bars.len()).map(|i| (i, None)).collect(),
        DependentKind::Basis => {
            let spot = spot.ok_or(MeasureError::MissingSpot)?;
            align_with_spot(series, spot)?;
            bars.iter()
                .enumerate()
                .filter_map(|(i, b)| spot.price_on(b.date).map(|p| (i, Some(p))))
                .collect()
        }
    };
    let unmatched_spot = match kind {
        DependentKind::Volatility => 0,
        DependentKind::Basis => bars.len() - candidates.len(),
    };
    let start = candidates.len().saturating_sub(window_days);
    candidates.drain(..start);

    let divisor = policy.activity_divisor(&series.asset);
    let mut rows = Vec::with_capacity(candidates.len());
    let mut dropped = Vec::new();
    for (idx, spot_price) in candidates {
        let bar = &bars[idx];
        match measure(kind, bar, spot_price) {
            Ok(value) => rows.push(ObservationRow {
                date: bar.date,
                dv: value * policy.dv_factor,
                m: (bars.len() - 1 - idx) as u32,
                v: bar.volume / divisor,
                o: bar.open_interest / divisor,
            }),
            Err(reason) => dropped.push(DroppedRow {
                date: bar.date,
                reason,
            }),
        }
    }
    if rows.is_empty() {
        return Err(MeasureError::EmptyPanel {
            asset: series.asset.clone(),
            contract: series.contract_month,
        });
    }
    Ok(ObservationPanel {
        asset: series.asset.clone(),
        contract_month: series.contract_month,
        rows,
        dropped,
        unmatched_spot,
    })
}

/// Panels for a set of contracts. Contracts whose panel comes out empty are
/// set aside in `skipped` instead of failing the whole set.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSet {
    pub panels: Vec<ObservationPanel>,
    pub skipped: Vec<(AssetId, ContractMonth)>,
}

/// Builds one panel per contract, pairing each with the spot series of its
/// asset. Basis panels for an asset without spot data are an error.
pub fn build_panels(
    contracts: &[ContractSeries],
    spots: &[SpotSeries],
    kind: DependentKind,
    policy: &ScalingPolicy,
    window_days: usize,
) -> Result<PanelSet, MeasureError> {
    let mut panels = Vec::with_capacity(contracts.len());
    let mut skipped = Vec::new();
    for series in contracts {
        let spot = spots.iter().find(|s| s.asset == series.asset);
        match build_panel(series, spot, kind, policy, window_days) {
            Ok(panel) => panels.push(panel),
            Err(MeasureError::EmptyPanel { asset, contract })
            | Err(MeasureError::Ingest(IngestError::EmptyJoin { asset, contract })) => {
                skipped.push((asset, contract))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PanelSet { panels, skipped })
}
