use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ggff::gff::EstimatorReport;
use ggff::identities::IdentityCheck;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Absolute,
    Relative,
    StandardErrors,
    Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

impl Verdict {
    pub fn identity(check: &IdentityCheck) -> Verdict {
        Verdict {
            name: check.name.clone(),
            value: Some(check.residual),
            target: Some(0.0),
            tolerance: check.tolerance,
            tolerance_kind: if check.kind == "relative" { ToleranceKind::Relative } else { ToleranceKind::Absolute },
            provenance: Provenance::ClosedForm,
            std_error: None,
            error: None,
            pass: check.pass(),
        }
    }

    /// Passes when the estimate is within `z` standard errors of its target.
    pub fn estimate(name: impl Into<String>, r: &EstimatorReport, z: f64) -> Verdict {
        Verdict {
            name: name.into(),
            value: Some(r.estimate),
            target: r.target,
            tolerance: z,
            tolerance_kind: ToleranceKind::StandardErrors,
            provenance: Provenance::MonteCarlo,
            std_error: Some(r.std_error),
            error: None,
            pass: r.within(z),
        }
    }

    pub fn moment(name: impl Into<String>, mean: f64, std_error: f64, target: f64, z: f64) -> Verdict {
        let d = (mean - target).abs();
        Verdict {
            name: name.into(),
            value: Some(mean),
            target: Some(target),
            tolerance: z,
            tolerance_kind: ToleranceKind::StandardErrors,
            provenance: Provenance::MonteCarlo,
            std_error: Some(std_error),
            error: None,
            pass: d == 0.0 || d <= z * std_error,
        }
    }

    /// A discrepancy already expressed in standard errors, with target 0.
    pub fn discrepancy(name: impl Into<String>, z_value: f64, z: f64) -> Verdict {
        Verdict {
            name: name.into(),
            value: Some(z_value),
            target: Some(0.0),
            tolerance: z,
            tolerance_kind: ToleranceKind::StandardErrors,
            provenance: Provenance::MonteCarlo,
            std_error: None,
            error: None,
            pass: z_value.is_finite() && z_value <= z,
        }
    }

    pub fn absolute(
        name: impl Into<String>,
        value: f64,
        target: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Verdict {
        Verdict {
            name: name.into(),
            value: Some(value),
            target: Some(target),
            tolerance,
            tolerance_kind: ToleranceKind::Absolute,
            provenance,
            std_error: None,
            error: None,
            pass: (value - target).abs() <= tolerance,
        }
    }

    pub fn exact(name: impl Into<String>, pass: bool, provenance: Provenance) -> Verdict {
        Verdict {
            name: name.into(),
            value: Some(if pass { 1.0 } else { 0.0 }),
            target: Some(1.0),
            tolerance: 0.0,
            tolerance_kind: ToleranceKind::Exact,
            provenance,
            std_error: None,
            error: None,
            pass,
        }
    }

    pub fn failed(name: impl Into<String>, provenance: Provenance, error: String) -> Verdict {
        Verdict {
            name: name.into(),
            value: None,
            target: None,
            tolerance: 0.0,
            tolerance_kind: ToleranceKind::Exact,
            provenance,
            std_error: None,
            error: Some(error),
            pass: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Value,
    pub seed: u64,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &'static str, inputs: Value, seed: u64) -> Report {
        Report { command, inputs, seed, results: Value::Object(Default::default()), verdicts: Vec::new(), pass: true }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.results.as_object_mut().expect("results is an object").insert(key.to_string(), v);
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn finish(mut self) -> Report {
        self.pass = self.verdicts.iter().all(|v| v.pass);
        self
    }

    pub fn write(&self, output: Option<&Path>) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        match output {
            Some(path) => fs::write(path, text),
            None => io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}
