//! The on-disk report schema and plot-data emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DominationReport, Fiber, SplittingKind};

/// The JSON report written by the front end. Field order is fixed by the
/// struct so identical runs serialize byte-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport {
    pub system: String,
    pub fiber: String,
    pub splitting_kind: String,
    pub horizon: f64,
    pub dt: f64,
    pub quotients: Vec<(f64, f64)>,
    #[serde(rename = "K")]
    pub k: f64,
    pub lambda: f64,
    pub r2: f64,
    pub verdict: String,
    pub diagnostics: BTreeMap<String, String>,
}

fn fiber_name(f: Fiber) -> &'static str {
    match f {
        Fiber::Tangent => "tangent",
        Fiber::Normal => "normal",
    }
}

fn kind_name(k: SplittingKind) -> &'static str {
    match k {
        SplittingKind::TwoBundle => "two_bundle",
        SplittingKind::ThreeBundleWithFlow => "three_bundle_with_flow",
    }
}

impl JsonReport {
    pub fn from_domination(
        system: &str,
        fiber: Fiber,
        kind: SplittingKind,
        dt: f64,
        report: &DominationReport,
        mut diagnostics: BTreeMap<String, String>,
    ) -> Self {
        diagnostics.insert(
            "max_invariance_defect".into(),
            format!("{:.6e}", report.max_invariance_defect),
        );
        diagnostics.insert(
            "lambda_min".into(),
            format!("{}", report.tolerance_profile.lambda_min),
        );
        diagnostics.insert("r2_min".into(), format!("{}", report.tolerance_profile.r2_min));
        JsonReport {
            system: system.to_string(),
            fiber: fiber_name(fiber).to_string(),
            splitting_kind: kind_name(kind).to_string(),
            horizon: report.horizon,
            dt,
            quotients: report.quotient_series.clone(),
            k: report.fitted_k,
            lambda: report.fitted_lambda,
            r2: report.r_squared,
            verdict: report.verdict.to_string(),
            diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Two-column whitespace-delimited plot data of a quotient series.
pub fn plotdata_lines(quotients: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (t, q) in quotients {
        out.push_str(&format!("{t:.9e} {q:.9e}\n"));
    }
    out
}

/// Companion file: the fitted model K e^{-lambda t} evaluated on the same grid.
pub fn fit_lines(quotients: &[(f64, f64)], k: f64, lambda: f64) -> String {
    let mut out = String::new();
    for (t, _) in quotients {
        let q = k * (-lambda * t).exp();
        out.push_str(&format!("{t:.9e} {q:.9e}\n"));
    }
    out
}
