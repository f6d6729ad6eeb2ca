//! Contract-by-contract regression analysis for futures markets.
//!
//! Each futures contract is studied on its own: the daily range volatility or
//! the spot/futures basis is regressed on the maturity counter, trading volume
//! and open interest, and per-model significance is aggregated across
//! contracts to pick the best explanatory model.
//!
//! The pipeline runs in stages that map onto the modules of this crate:
//!
//! * [`marketdata`]: CSV ingestion, validation, windowing and the contract calendar.
//! * [`measures`]: Parkinson volatility, percentage basis and panel construction.
//! * [`stats`]: descriptive statistics and the Student-t distribution.
//! * [`regress`]: OLS with classical inference, solved by Householder QR.
//! * [`analysis`]: per-contract fits, model summaries and model selection.
//! * [`synth`]: a seeded synthetic market with a planted linear signal.
//! * [`report`]: markdown/CSV/JSON rendering and run manifests.

pub mod analysis;
pub mod error;
pub mod marketdata;
pub mod measures;
pub mod regress;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
