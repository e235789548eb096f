//! Report assembly and serialisation (JSON and CSV).

use crate::error::{Error, Result};
use crate::verify::{summarize, CheckResult, Config, Status};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub ambiguous: usize,
    pub refused: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: Config,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    /// Sorts by (name, parameters) so the output does not depend on execution order.
    pub fn new(config: Config, mut results: Vec<CheckResult>) -> Self {
        results.sort_by_cached_key(|r| (r.name.clone(), serde_json::to_string(&r.params).unwrap_or_default()));
        let summary = summarize(&results);
        Report {
            version: VERSION.to_string(),
            config,
            results,
            summary,
        }
    }

    /// 0 when every result passed; ambiguous and refused results count as
    /// failures unless `allow_ambiguous`.
    pub fn exit_code(&self, allow_ambiguous: bool) -> i32 {
        let bad = self.results.iter().any(|r| match r.status {
            Status::Pass => false,
            Status::Fail => true,
            Status::Ambiguous | Status::Refused => !allow_ambiguous,
        });
        i32::from(bad)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParams(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParams(e.to_string()))
    }

    /// One row per result; `params`, `expected` and `observed` are embedded as JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidParams(e.to_string());
        w.write_record([
            "name",
            "params",
            "expected",
            "observed",
            "residual",
            "tolerance",
            "gap",
            "status",
            "wall_time",
            "note",
        ])
        .map_err(io)?;
        for r in &self.results {
            let status = serde_json::to_value(r.status).unwrap();
            w.write_record([
                r.name.clone(),
                serde_json::to_string(&r.params).unwrap(),
                r.expected.to_string(),
                r.observed.to_string(),
                r.residual.to_string(),
                r.tolerance.to_string(),
                r.gap.map(|g| g.to_string()).unwrap_or_default(),
                status.as_str().unwrap_or_default().to_string(),
                r.wall_time.to_string(),
                r.note.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidParams(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn result(name: &str, status: Status) -> CheckResult {
        CheckResult {
            name: name.into(),
            params: BTreeMap::from([("n".to_string(), serde_json::json!(3))]),
            expected: serde_json::json!(1),
            observed: serde_json::json!(1),
            residual: 0.1 + 0.2,
            tolerance: 0.5,
            gap: Some(1.0e12),
            status,
            wall_time: 0.0,
            note: None,
        }
    }

    #[test]
    fn empty_report() {
        let r = Report::new(Config::default(), vec![]);
        assert_eq!(r.summary, Summary::default());
        assert_eq!(r.exit_code(false), 0);
    }

    #[test]
    fn exit_codes() {
        let r = Report::new(
            Config::default(),
            vec![result("a", Status::Pass), result("b", Status::Fail)],
        );
        assert_eq!(r.exit_code(true), 1);
        assert!(r.to_json().unwrap().contains("\"status\": \"fail\""));
        let r = Report::new(Config::default(), vec![result("a", Status::Ambiguous)]);
        assert_eq!(r.exit_code(false), 1);
        assert_eq!(r.exit_code(true), 0);
    }

    #[test]
    fn json_round_trip() {
        let r = Report::new(
            Config::default(),
            vec![result("z", Status::Pass), result("a", Status::Refused)],
        );
        assert_eq!(r.results[0].name, "a");
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_rows() {
        let r = Report::new(Config::default(), vec![result("a", Status::Pass)]);
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("name,params,"));
        assert!(lines.next().unwrap().contains(",pass,"));
    }
}
