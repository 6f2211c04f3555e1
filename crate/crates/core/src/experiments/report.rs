//! Experiment reports (JSON) and per-epsilon sample tables (CSV).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::stats::{KSResult, MixingReport};

pub const REPORT_SCHEMA: &str = "diffzoom.report/1";
pub const SAMPLES_SCHEMA: &str = "diffzoom.samples/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "in")]
    Within,
    /// Mixing/independence decision at the configured level.
    #[serde(rename = "not_rejected")]
    NotRejected,
}

/// One asserted or recorded claim.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// Stable identifier, e.g. `zoom_sup.post_bessel_ks`.
    pub id: String,
    pub claim: String,
    pub epsilon: Option<f64>,
    pub statistic: f64,
    pub threshold: f64,
    /// Upper bound for `Within`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_hi: Option<f64>,
    pub relation: Relation,
    pub passed: bool,
    /// Asserted checks decide the exit status; the rest are recorded only.
    pub asserted: bool,
    /// Compares against a conjectured (unproven) limit.
    pub conjecture: bool,
}

impl Check {
    pub fn new(id: &str, claim: &str, epsilon: Option<f64>, statistic: f64, relation: Relation, threshold: f64) -> Self {
        let passed = match relation {
            Relation::Less => statistic < threshold,
            Relation::AtMost => statistic <= threshold,
            Relation::AtLeast => statistic >= threshold,
            Relation::Within | Relation::NotRejected => false,
        };
        Self {
            id: id.to_string(),
            claim: claim.to_string(),
            epsilon,
            statistic,
            threshold,
            threshold_hi: None,
            relation,
            passed,
            asserted: true,
            conjecture: false,
        }
    }

    pub fn within(id: &str, claim: &str, epsilon: Option<f64>, statistic: f64, lo: f64, hi: f64) -> Self {
        Self {
            threshold_hi: Some(hi),
            passed: statistic >= lo && statistic <= hi,
            relation: Relation::Within,
            ..Self::new(id, claim, epsilon, statistic, Relation::AtLeast, lo)
        }
    }

    /// Passes when the smallest p-value stays at or above `alpha`.
    pub fn not_rejected(id: &str, claim: &str, epsilon: Option<f64>, p_value: f64, alpha: f64) -> Self {
        Self {
            passed: p_value >= alpha,
            relation: Relation::NotRejected,
            ..Self::new(id, claim, epsilon, p_value, Relation::AtLeast, alpha)
        }
    }

    pub fn recorded_only(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn conjectural(mut self) -> Self {
        self.conjecture = true;
        self
    }
}

/// Statistics gathered at one epsilon.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub stride: usize,
    pub paths_used: usize,
    pub excluded: usize,
    pub ks: BTreeMap<String, KSResult>,
    pub mixing: BTreeMap<String, MixingReport>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
    pub paths_per_second: f64,
    pub fine_steps_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub path_id: u64,
    pub epsilon: f64,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub per_epsilon: Vec<EpsilonSummary>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub passed: bool,
    /// Wall-clock dependent; excluded from reproducibility comparisons.
    pub timing: Timing,
    #[serde(skip)]
    pub samples: Vec<SampleRow>,
    /// Extra `(file name, contents)` written next to the report.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            experiment: experiment.to_string(),
            config: config.clone(),
            per_epsilon: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            passed: true,
            timing: Timing::default(),
            samples: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
        self.passed = self.checks.iter().filter(|c| c.asserted).all(|c| c.passed);
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn at_epsilon(&self, epsilon: f64) -> Option<&EpsilonSummary> {
        self.per_epsilon.iter().find(|s| s.epsilon == epsilon)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Report JSON without the timing block; byte-identical across reruns
    /// with the same configuration and seed.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(map) = v.as_object_mut() {
            map.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema={SAMPLES_SCHEMA}")?;
        writeln!(out, "path_id,epsilon,statistic_name,value")?;
        for r in &self.samples {
            writeln!(out, "{},{},{},{}", r.path_id, r.epsilon, r.statistic, r.value)?;
        }
        Ok(())
    }

    /// Writes `<experiment>.json`, `<experiment>_samples.csv` and the artifacts into `dir`.
    pub fn write_to(&self, dir: &FsPath) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.experiment));
        fs::write(&json, self.to_json()? + "\n")?;
        let csv = dir.join(format!("{}_samples.csv", self.experiment));
        let file = fs::File::create(&csv)?;
        self.write_samples_csv(std::io::BufWriter::new(file))?;
        let mut written = vec![json, csv];
        for (name, contents) in &self.artifacts {
            let p = dir.join(name);
            fs::write(&p, contents)?;
            written.push(p);
        }
        Ok(written)
    }

    /// Single-line human summary.
    pub fn headline(&self) -> String {
        let asserted: Vec<&Check> = self.checks.iter().filter(|c| c.asserted).collect();
        let ok = asserted.iter().filter(|c| c.passed).count();
        format!(
            "{}: {} ({}/{} asserted checks passed, {:.1}s)",
            self.experiment,
            if self.passed { "PASS" } else { "FAIL" },
            ok,
            asserted.len(),
            self.timing.wall_seconds
        )
    }
}
