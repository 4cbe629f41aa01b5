//! Check records and reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Anchor used by checks that only exercise infrastructure.
pub const PLUMBING: &str = "plumbing";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub report_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl CheckRecord {
    /// Passes iff `residual <= threshold` (a NaN residual fails).
    pub fn residual(id: impl Into<String>, anchor: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            residual,
            threshold,
            pass: residual <= threshold,
            report_only: false,
            witness: None,
            detail: None,
            wall_time_ms: None,
        }
    }

    /// A yes/no check; residual is 0 on pass and 1 on failure.
    pub fn flag(id: impl Into<String>, anchor: impl Into<String>, pass: bool) -> Self {
        let mut r = Self::residual(id, anchor, if pass { 0.0 } else { 1.0 }, 0.0);
        r.pass = pass;
        r
    }

    /// A check whose expected outcome is failure: passes when the residual exceeds the threshold.
    pub fn expect_nonzero(id: impl Into<String>, anchor: impl Into<String>, residual: f64, threshold: f64) -> Self {
        let mut r = Self::residual(id, anchor, residual, threshold);
        r.pass = residual > threshold;
        r
    }

    pub fn report_only(mut self) -> Self {
        self.report_only = true;
        self
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn with_optional_witness(mut self, w: Option<String>) -> Self {
        self.witness = w;
        self
    }

    /// Whether this record counts against the run.
    pub fn is_failure(&self) -> bool {
        !self.pass && !self.report_only
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub report_only: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub fixture: String,
    pub suite: String,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(fixture: impl Into<String>, suite: impl Into<String>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            fixture: fixture.into(),
            suite: suite.into(),
            seed,
            records: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
        self.refresh();
    }

    pub fn extend<I: IntoIterator<Item = CheckRecord>>(&mut self, rs: I) {
        self.records.extend(rs);
        self.refresh();
    }

    fn refresh(&mut self) {
        let mut s = Summary { total: self.records.len(), ..Summary::default() };
        for r in &self.records {
            if r.report_only {
                s.report_only += 1;
            } else if r.pass {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
        }
        self.summary = s;
    }

    /// All non-report-only checks pass.
    pub fn passed(&self) -> bool {
        !self.records.iter().any(CheckRecord::is_failure)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn find(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

/// Serializes a report. Wall times are dropped unless `timings` is set, so
/// the same fixture and seed always give the same bytes.
pub fn emit(report: &Report, format: Format, timings: bool) -> String {
    let mut report = report.clone();
    if !timings {
        for r in &mut report.records {
            r.wall_time_ms = None;
        }
    }
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "fixture {} suite {} seed {}", report.fixture, report.suite, report.seed);
            for r in &report.records {
                let status = match (r.pass, r.report_only) {
                    (_, true) => "INFO",
                    (true, false) => "PASS",
                    (false, false) => "FAIL",
                };
                let _ = write!(
                    out,
                    "{status} {:<40} residual {:.3e} threshold {:.1e}  [{}]",
                    r.id, r.residual, r.threshold, r.anchor
                );
                if let Some(w) = &r.witness {
                    let _ = write!(out, " witness {w}");
                }
                if let Some(d) = &r.detail {
                    let _ = write!(out, " ({d})");
                }
                if let Some(t) = r.wall_time_ms {
                    let _ = write!(out, " {t:.1} ms");
                }
                out.push('\n');
            }
            let s = report.summary;
            let _ = writeln!(
                out,
                "{} checks: {} passed, {} failed, {} report-only",
                s.total, s.passed, s.failed, s.report_only
            );
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid_and_passes() {
        let r = Report::new("none", "axioms", 0);
        assert!(r.passed());
        let json = emit(&r, Format::Json, false);
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn report_only_failures_do_not_fail_the_run() {
        let mut r = Report::new("f", "s", 0);
        r.push(CheckRecord::residual("a", PLUMBING, 1.0, 0.5).report_only());
        assert!(r.passed());
        r.push(CheckRecord::residual("b", PLUMBING, f64::NAN, 0.5));
        assert!(!r.passed());
        assert_eq!(r.summary, Summary { total: 2, passed: 0, failed: 1, report_only: 1 });
    }

    #[test]
    fn text_contains_anchor_and_json_drops_times() {
        let mut r = Report::new("f", "s", 3);
        let mut rec = CheckRecord::residual("x", "DJ = ε′JD", 0.0, 1e-9);
        rec.wall_time_ms = Some(1.5);
        r.push(rec);
        assert!(emit(&r, Format::Text, false).contains("DJ = ε′JD"));
        assert!(!emit(&r, Format::Json, false).contains("wall_time_ms"));
        assert!(emit(&r, Format::Json, true).contains("wall_time_ms"));
    }
}
