//! Machine-readable run reports (`fale-report-v1`).
//!
//! ```json
//! {
//!   "format": "fale-report-v1",
//!   "tool_version": "0.1.0",
//!   "metadata": { "command": "audit", "config": {...}, "dataset_fingerprint": "sha256:...", ... },
//!   "analysis": "fale",
//!   "curve": { "feature": ..., "partition": ..., "per_bin": [...], "global_unfairness": ..., ... }
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so parsing a report
//! reconstructs the curve bit for bit.

use std::fs;
use std::path::Path;

use fale_core::{AleCurve, ErrorKind, FaleCurve};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "fale-report-v1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: Option<String>,
    /// The resolved run configuration.
    pub config: Option<serde_json::Value>,
    pub data_path: Option<String>,
    pub schema_path: Option<String>,
    pub dataset_fingerprint: Option<String>,
    pub model: Option<String>,
    pub rows: Option<usize>,
    /// Rows whose protected value matched neither side of the split.
    pub excluded_rows: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "analysis", content = "curve", rename_all = "snake_case")]
pub enum Curve {
    Fale(FaleCurve),
    Ale(AleCurve),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub tool_version: String,
    pub metadata: RunMetadata,
    #[serde(flatten)]
    pub curve: Curve,
}

impl Report {
    pub fn new(curve: Curve, metadata: RunMetadata) -> Self {
        Self {
            format: FORMAT.into(),
            tool_version: crate::VERSION.into(),
            metadata,
            curve,
        }
    }

    pub fn fale(curve: FaleCurve, metadata: RunMetadata) -> Self {
        Self::new(Curve::Fale(curve), metadata)
    }

    pub fn ale(curve: AleCurve, metadata: RunMetadata) -> Self {
        Self::new(Curve::Ale(curve), metadata)
    }

    pub fn fale_curve(&self) -> Option<&FaleCurve> {
        match &self.curve {
            Curve::Fale(c) => Some(c),
            Curve::Ale(_) => None,
        }
    }

    pub fn ale_curve(&self) -> Option<&AleCurve> {
        match &self.curve {
            Curve::Ale(c) => Some(c),
            Curve::Fale(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(FORMAT) => {}
            Some(other) => return Err(format!("unsupported report format `{other}`")),
            None => return Err("missing `format` field".into()),
        }
        // Parse from text rather than from `value` so floats are read once.
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, ErrorKind::Data, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, ErrorKind::Data, e))?;
        Self::from_json(&text).map_err(|m| Error::format(path, ErrorKind::Data, m))
    }
}

/// The number as it appears in a report.
pub fn format_number(v: f64) -> String {
    serde_json::to_string(&v).expect("finite number")
}
