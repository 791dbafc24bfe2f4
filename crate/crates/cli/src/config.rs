use std::path::{Path, PathBuf};

use csmg_core::{ExperimentConfig, Family, ScanMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run description loaded from TOML. Unknown keys are rejected at every level.
///
/// ```toml
/// [experiment]
/// p_d = 0.5
/// p_zz = 0.01
/// n_photons = 10_000_000
///
/// [scan]
/// families = ["gamma1", "gamma2"]
/// lmax = 20
/// mode = "overlapping"
///
/// [output]
/// record = "run.csmg"
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub scan: ScanSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub families: Vec<Family>,
    /// Explicit separations; overrides `lmax` when present.
    pub ls: Option<Vec<u32>>,
    pub lmax: u32,
    pub mode: ScanMode,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            families: Family::ALL.to_vec(),
            ls: None,
            lmax: 20,
            mode: ScanMode::Overlapping,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub record: Option<PathBuf>,
    pub estimates: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Accepts plain integers, `1_000_000` and exponent forms such as `1e10`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let t = s.trim().replace('_', "");
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = t.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}
