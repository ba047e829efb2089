//! Pass/fail records shared by the bundle checks and the CLI.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    /// The identity or estimate being checked, written out.
    pub anchor: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    /// Passes when `measured ≤ bound` (false for NaN).
    pub fn at_most(check: impl Into<String>, anchor: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { check: check.into(), anchor: anchor.into(), measured, bound, pass: measured <= bound, detail: None }
    }

    pub fn flag(check: impl Into<String>, anchor: impl Into<String>, pass: bool) -> Self {
        Self {
            check: check.into(),
            anchor: anchor.into(),
            measured: if pass { 1.0 } else { 0.0 },
            bound: 1.0,
            pass,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Taken from `SOURCE_DATE_EPOCH` when set; absent otherwise so that
    /// repeated runs produce identical reports.
    pub timestamp: Option<String>,
    pub config: serde_json::Value,
}

impl RunMeta {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().filter(|s| !s.is_empty()),
            config,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub meta: RunMeta,
    pub records: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(meta: RunMeta, records: Vec<CheckRecord>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        Self { meta, records, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_conjunction() {
        let meta = RunMeta::new("verify", 0, serde_json::Value::Null);
        let ok = CheckRecord::at_most("a", "x", 1.0, 2.0);
        let nan = CheckRecord::at_most("b", "x", f64::NAN, 2.0);
        assert!(VerificationReport::new(meta.clone(), vec![ok.clone()]).pass);
        let r = VerificationReport::new(meta, vec![ok, nan]);
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }
}
