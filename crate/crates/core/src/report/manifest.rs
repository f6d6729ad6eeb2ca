use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ReportError;
use crate::marketdata::AssetId;
use crate::measures::{DependentKind, ScalingPolicy};
use crate::regress::ModelSpec;

/// Everything needed to rerun an analysis. Only `generated_at` varies
/// between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub generated_at: String,
    pub command: String,
    pub dependent: Option<DependentKind>,
    pub window_days: usize,
    pub alpha: f64,
    pub asset_filter: Option<AssetId>,
    pub models: Vec<ModelSpec>,
    pub scaling: ScalingPolicy,
    pub conventions: EstimatorConventions,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    /// Manifest for `command` with default settings and no inputs.
    pub fn new(command: &str, generated_at: String) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generated_at,
            command: command.into(),
            dependent: None,
            window_days: 42,
            alpha: crate::analysis::DEFAULT_ALPHA,
            asset_filter: None,
            models: Vec::new(),
            scaling: ScalingPolicy::default(),
            conventions: EstimatorConventions::default(),
            inputs: Vec::new(),
        }
    }
}

/// Fixed modelling conventions, spelled out so a reader of the manifest
/// need not consult the code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConventions {
    pub window: String,
    pub maturity: String,
    pub basis_alignment: String,
    pub covariance: String,
    pub p_values: String,
    pub significance: String,
    pub kurtosis: String,
    pub rounding: String,
}

impl Default for EstimatorConventions {
    fn default() -> Self {
        EstimatorConventions {
            window: "last window_days trading-day bars of each contract".into(),
            maturity: "contract bars strictly after the date, up to expiry".into(),
            basis_alignment: "same-day spot and futures closes".into(),
            covariance: "classical OLS (homoskedastic)".into(),
            p_values: "two-sided Student-t with n-k-1 degrees of freedom".into(),
            significance: "p-value strictly below alpha".into(),
            kurtosis: "non-excess (normal = 3)".into(),
            rounding: "round half to even".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &str, contents: &[u8]) -> Self {
        InputDigest {
            path: path.into(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_run_manifest(manifest: &RunManifest) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(manifest)?;
    s.push('\n');
    Ok(s)
}
