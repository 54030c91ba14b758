//! The JSON report written by every command.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Hypotheses that no command can check numerically; listed in every report.
pub const STANDING_WARNINGS: &[&str] = &[
    "eta: the chart domain bound eta_hat is a user value or a box/Picard-Lindelof estimate; the analytic extension of the fields to the complex box it assumes is not checked",
    "delta_0: the scale below which the ball estimates hold with the reported constants is not determined; tables only sample the given grid",
    "norm tails: series are truncated at degree M; norms and residuals cover stored coefficients only and carry no tail bound",
    "xi radii: the ball-inclusion radii around the chart image are not computed",
    "structure coefficients fitted on a Euclidean box around the base point, not on a Carnot-Caratheodory ball",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A mathematical hypothesis failed or a `verify` check did not pass.
    HypothesisFailure,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::HypothesisFailure => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub command: String,
    /// Echo of the effective options.
    pub arguments: Value,
    /// SHA-256 of the spec text.
    pub inputs_digest: Option<String>,
    pub status: Status,
    pub results: Value,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
    pub error: Option<ErrorEntry>,
}

impl ReportDocument {
    pub fn new(command: &str, arguments: Value) -> Self {
        ReportDocument {
            command: command.to_string(),
            arguments,
            inputs_digest: None,
            status: Status::Ok,
            results: Value::Null,
            diagnostics: Value::Null,
            warnings: STANDING_WARNINGS.iter().map(|s| s.to_string()).collect(),
            error: None,
        }
    }

    pub fn to_json(&self) -> String {
        // serialising plain data into a String cannot fail
        serde_json::to_string_pretty(self).expect("report serialisation") + "\n"
    }
}

pub fn digest(text: &str) -> String {
    let h = Sha256::digest(text.as_bytes());
    h.iter().map(|b| format!("{b:02x}")).collect()
}
