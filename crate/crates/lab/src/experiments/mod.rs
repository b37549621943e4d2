//! Experiment drivers. Each returns tables, plot specs, extra files and the
//! list of asserted checks; [`write_output`] puts them on disk.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, ExperimentConfig};
use crate::io::{Table, Value};
use crate::svg::{self, PlotSpec};
use crate::LabError;

pub mod bloom_failure;
pub mod bloom_upper;
pub mod decompose;
pub mod diagnose;
pub mod embedding;
pub mod necessity;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    /// `(table name, plot)`.
    pub plots: Vec<(String, PlotSpec)>,
    /// `(relative path, contents)`.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["check", "passed", "detail"]);
        for c in &self.checks {
            t.push(vec![c.name.as_str().into(), c.passed.into(), c.detail.as_str().into()]);
        }
        t
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput, LabError> {
    match config.experiment {
        Experiment::BloomUpper => bloom_upper::run(config),
        Experiment::BloomFailure => bloom_failure::run(config),
        Experiment::Embedding => embedding::run(config),
        Experiment::Necessity => necessity::run(config),
        Experiment::Decompose => decompose::run(config),
        Experiment::DiagnoseWeight => diagnose::run(config),
    }
}

/// Writes `<table>.csv`, `checks.csv`, `config.txt`, the plots (rendered from
/// the CSV text) and the extra files.
pub fn write_output(dir: &Path, config: &ExperimentConfig, out: &ExperimentOutput) -> Result<(), LabError> {
    fs::create_dir_all(dir)?;
    let hash = config.hash();
    fs::write(dir.join("config.txt"), config.canonical())?;
    for t in out.tables.iter().chain(std::iter::once(&out.checks_table())) {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv(&hash)?)?;
    }
    for (table, plot) in &out.plots {
        let text = fs::read_to_string(dir.join(format!("{table}.csv")))?;
        fs::write(dir.join(&plot.file), svg::render(&text, plot)?)?;
    }
    for (rel, text) in &out.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, text)?;
    }
    Ok(())
}

/// Independent stream `index` of the seeded generator.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn plot(file: &str, title: &str, x: &str, y: &str, group: Option<&str>, log_x: bool, log_y: bool) -> PlotSpec {
    PlotSpec {
        file: file.to_string(),
        title: title.to_string(),
        x: x.to_string(),
        y: y.to_string(),
        group: group.map(str::to_string),
        log_x,
        log_y,
    }
}

fn real(v: f64) -> Value {
    Value::Real(v)
}
