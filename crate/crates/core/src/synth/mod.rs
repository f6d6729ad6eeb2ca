//! Seeded synthetic futures market with a planted linear signal.
//!
//! Spot follows a geometric Brownian motion on a weekday calendar. Each
//! monthly contract is priced off spot by cost of carry,
//! `F = S exp((r + u - y) T)` with `T` the remaining trading days over 252,
//! so the basis is exactly zero on the expiry bar. Open interest follows a
//! downward parabola over the contract's listed life and volume is
//! lognormal around `volume_mean`.
//!
//! The daily high and low are placed symmetrically around the close in log
//! space, `H = C e^{x/2}`, `L = C e^{-x/2}`, with `x = sqrt(4 ln 2 dv_raw)`.
//! This inverts the Parkinson estimator so that the volatility panel
//! reproduces `b0 + b1 m + b2 v + b3 o + noise` exactly.
//!
//! Streams: spot uses `FixtureRng::new(!seed)`, contract `i` (0-based) uses
//! `FixtureRng::new(seed ^ i)`. Per bar the contract stream draws the volume
//! normal first and then the noise normal.

mod rng;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rng::FixtureRng;

use crate::marketdata::{
    is_weekday, next_weekday, weekdays_ending_at, AssetId, ContractMonth, ContractSeries,
    DailyBar, IngestError, ObservationPanel, SpotSeries,
};
use crate::measures::{build_panel, DependentKind, MeasureError, ScalingPolicy};

/// Trading days per year used for the GBM step and time to maturity.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(
        "planted dv {dv} on {date} for {contract} is not positive; \
         no high/low spread can represent it (try a larger intercept b0)"
    )]
    UnrepresentableSpread {
        contract: ContractMonth,
        date: NaiveDate,
        dv: f64,
    },
    #[error("maturity {m} exceeds contract life {life}")]
    OiDomain { m: u32, life: u32 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub asset: AssetId,
    pub first_contract: ContractMonth,
    pub n_contracts: usize,
    /// Bars kept per contract by the analysis window.
    pub window_days: usize,
    /// Bars generated per contract, from listing to expiry.
    pub contract_days: usize,
    pub spot0: f64,
    /// Annual GBM drift.
    pub drift: f64,
    /// Annual GBM volatility.
    pub vol: f64,
    /// Annual risk-free rate.
    pub r: f64,
    /// Annual storage cost.
    pub u: f64,
    /// Annual convenience yield.
    pub y: f64,
    pub oi_peak: f64,
    pub volume_mean: f64,
    /// Log-space standard deviation of daily volume.
    pub volume_dispersion: f64,
    /// Planted `(b0, b1, b2, b3)` for `dv = b0 + b1 m + b2 v + b3 o`.
    pub dgp_beta: [f64; 4],
    pub noise_sigma: f64,
    pub scaling: ScalingPolicy,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            asset: AssetId::Bitcoin,
            first_contract: ContractMonth {
                year: 2018,
                month: 1,
            },
            n_contracts: 47,
            window_days: 42,
            contract_days: 63,
            spot0: 10_000.0,
            drift: 0.3,
            vol: 0.8,
            r: 0.03,
            u: 0.01,
            y: 0.0,
            oi_peak: 1_000.0,
            volume_mean: 2_000.0,
            volume_dispersion: 0.25,
            dgp_beta: [5.0, 0.3, 0.02, -0.01],
            noise_sigma: 1.0,
            scaling: ScalingPolicy::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if !(self.spot0.is_finite() && self.spot0 > 0.0) {
            return bad(format!("spot0 must be positive, got {}", self.spot0));
        }
        if !(self.vol.is_finite() && self.vol >= 0.0) {
            return bad(format!("vol must be non-negative, got {}", self.vol));
        }
        if self.window_days < 4 {
            return bad(format!("window_days must be at least 4, got {}", self.window_days));
        }
        if self.contract_days < self.window_days {
            return bad("contract_days must be at least window_days".into());
        }
        if self.n_contracts == 0 {
            return bad("n_contracts must be positive".into());
        }
        if !(self.volume_mean.is_finite() && self.volume_mean > 0.0) {
            return bad("volume_mean must be positive".into());
        }
        if !(self.volume_dispersion.is_finite() && self.volume_dispersion >= 0.0) {
            return bad("volume_dispersion must be non-negative".into());
        }
        if !(self.oi_peak.is_finite() && self.oi_peak >= 0.0) {
            return bad("oi_peak must be non-negative".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative".into());
        }
        if ![self.drift, self.r, self.u, self.y]
            .iter()
            .chain(&self.dgp_beta)
            .all(|v| v.is_finite())
        {
            return bad("rates and coefficients must be finite".into());
        }
        ContractMonth::new(self.first_contract.year, self.first_contract.month)?;
        self.scaling.validate()?;
        Ok(())
    }

    pub fn contract_months(&self) -> Vec<ContractMonth> {
        std::iter::successors(Some(self.first_contract), |c| Some(c.succ()))
            .take(self.n_contracts)
            .collect()
    }
}

/// Ground truth recorded alongside a synthetic market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub config: SynthConfig,
    pub true_beta: [f64; 4],
    /// Noise-free dv per contract and bar.
    pub planted_dv: Vec<Vec<f64>>,
    /// Planted dv plus noise, as encoded in the high/low spread.
    pub realized_dv: Vec<Vec<f64>>,
    /// Volatility panels built from the generated series.
    pub panels: Vec<ObservationPanel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub contracts: Vec<ContractSeries>,
    pub spot: SpotSeries,
    pub truth: SynthTruth,
}

/// Futures price under cost of carry, `S exp((r + u - y) T)`.
pub fn carry_futures(spot: f64, r: f64, u: f64, y: f64, years: f64) -> f64 {
    spot * ((r + u - y) * years).exp()
}

/// Open interest `m` trading days before expiry for a contract listed
/// `life` days before expiry: a parabola through zero at both ends peaking
/// at `peak` halfway, rounded to whole contracts.
pub fn oi_profile(m: u32, life: u32, peak: f64) -> Result<f64, SynthError> {
    if m > life {
        return Err(SynthError::OiDomain { m, life });
    }
    if life == 0 {
        return Ok(0.0);
    }
    let (m, life) = (f64::from(m), f64::from(life));
    Ok((4.0 * peak * m * (life - m) / (life * life)).round())
}

/// `n_days` weekdays of GBM spot starting at `start` (or the next weekday).
pub fn gbm_spot(config: &SynthConfig, start: NaiveDate, n_days: usize) -> SpotSeries {
    let mut rng = FixtureRng::new(!config.seed);
    let dt = 1.0 / TRADING_DAYS_PER_YEAR;
    let mu = config.drift * dt - 0.5 * config.vol * config.vol * dt;
    let sd = config.vol * dt.sqrt();
    let mut date = if is_weekday(start) {
        start
    } else {
        next_weekday(start)
    };
    let mut log_return = 0.0;
    let mut points = Vec::with_capacity(n_days);
    for i in 0..n_days {
        if i > 0 {
            log_return += rng.normal(mu, sd);
            date = next_weekday(date);
        }
        points.push((date, config.spot0 * f64::exp(log_return)));
    }
    SpotSeries::new(config.asset.clone(), points).expect("weekday dates are increasing")
}

struct GeneratedContract {
    series: ContractSeries,
    planted: Vec<f64>,
    realized: Vec<f64>,
}

fn generate_contract(
    config: &SynthConfig,
    index: usize,
    contract: ContractMonth,
    spot: &SpotSeries,
) -> Result<GeneratedContract, SynthError> {
    let mut rng = FixtureRng::new(config.seed ^ index as u64);
    let expiry = contract.expiry();
    let dates = weekdays_ending_at(expiry, config.contract_days);
    let life = (config.contract_days - 1) as u32;
    let divisor = config.scaling.activity_divisor(&config.asset);
    let [b0, b1, b2, b3] = config.dgp_beta;
    let disp = config.volume_dispersion;

    let mut bars = Vec::with_capacity(dates.len());
    let mut planted = Vec::with_capacity(dates.len());
    let mut realized = Vec::with_capacity(dates.len());
    for (i, &date) in dates.iter().enumerate() {
        let m = life - i as u32;
        let s = spot
            .price_on(date)
            .expect("spot calendar covers every contract date");
        let futures = carry_futures(
            s,
            config.r,
            config.u,
            config.y,
            f64::from(m) / TRADING_DAYS_PER_YEAR,
        );
        let z_volume = rng.standard_normal();
        let z_noise = rng.standard_normal();
        let volume = (config.volume_mean * (disp * z_volume - 0.5 * disp * disp).exp())
            .round()
            .max(1.0);
        let open_interest = oi_profile(m, life, config.oi_peak)?;
        let dv_clean =
            b0 + b1 * f64::from(m) + b2 * (volume / divisor) + b3 * (open_interest / divisor);
        let dv = dv_clean + config.noise_sigma * z_noise;
        if dv <= 0.0 {
            return Err(SynthError::UnrepresentableSpread { contract, date, dv });
        }
        let x = (4.0 * std::f64::consts::LN_2 * dv / config.scaling.dv_factor).sqrt();
        bars.push(DailyBar {
            date,
            high: futures * (0.5 * x).exp(),
            low: futures * (-0.5 * x).exp(),
            close: futures,
            volume,
            open_interest,
        });
        planted.push(dv_clean);
        realized.push(dv);
    }
    let series = ContractSeries::new(config.asset.clone(), contract, None, bars)?;
    Ok(GeneratedContract {
        series,
        planted,
        realized,
    })
}

/// Generates contracts, spot and the recorded ground truth.
pub fn generate_market(config: &SynthConfig) -> Result<SynthMarket, SynthError> {
    config.validate()?;
    let months = config.contract_months();
    let first_day = weekdays_ending_at(months[0].expiry(), config.contract_days)[0];
    let last_day = months[months.len() - 1].expiry();
    let mut n_days = 1;
    let mut d = first_day;
    while d < last_day {
        d = next_weekday(d);
        n_days += 1;
    }
    let spot = gbm_spot(config, first_day, n_days);

    let generated: Vec<GeneratedContract> = months
        .par_iter()
        .enumerate()
        .map(|(i, &month)| generate_contract(config, i, month, &spot))
        .collect::<Result<_, _>>()?;

    let mut contracts = Vec::with_capacity(generated.len());
    let mut planted_dv = Vec::with_capacity(generated.len());
    let mut realized_dv = Vec::with_capacity(generated.len());
    for g in generated {
        contracts.push(g.series);
        planted_dv.push(g.planted);
        realized_dv.push(g.realized);
    }
    let panels = contracts
        .iter()
        .map(|c| {
            build_panel(
                c,
                None,
                DependentKind::Volatility,
                &config.scaling,
                config.window_days,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SynthMarket {
        contracts,
        spot,
        truth: SynthTruth {
            config: config.clone(),
            true_beta: config.dgp_beta,
            planted_dv,
            realized_dv,
            panels,
        },
    })
}
