use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rough_pdo::BoundReport;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Assertion {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Assertion {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} <= {threshold:.6e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Assertion {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            detail: format!("{value:.6e} >= {threshold:.6e}"),
        }
    }

    pub fn check(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, value: f64::from(passed as u8), threshold: 1.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub measured: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub notes: Vec<String>,
    pub bound_reports: BTreeMap<String, BoundReport>,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<String>,
    pub wall_clock_s: f64,
    /// CSV tables written next to the report, keyed by file stem.
    #[serde(skip)]
    pub csv: BTreeMap<String, String>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            experiment: config.experiment.clone(),
            seed: config.seed,
            config: config.clone(),
            measured: BTreeMap::new(),
            series: BTreeMap::new(),
            notes: Vec::new(),
            bound_reports: BTreeMap::new(),
            assertions: Vec::new(),
            artifacts: Vec::new(),
            wall_clock_s: 0.0,
            csv: BTreeMap::new(),
        }
    }

    pub fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.into(), v);
    }

    pub fn series(&mut self, key: &str, v: Vec<f64>) {
        self.series.insert(key.into(), v);
    }

    pub fn assert(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    /// The report without its wall-clock field, for reproducibility checks.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_s = 0.0;
        r.to_json()
    }

    /// Writes `<experiment>.json` and every CSV table into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (stem, body) in &self.csv {
            let p = dir.join(format!("{}-{stem}.csv", self.experiment));
            fs::write(&p, body)?;
            paths.push(p.display().to_string());
        }
        let json = dir.join(format!("{}.json", self.experiment));
        paths.push(json.display().to_string());
        self.artifacts = paths;
        fs::write(&json, self.to_json())?;
        Ok(())
    }
}
