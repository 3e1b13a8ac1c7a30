//! Reproducible experiment runner: parameter resolution, artifact writing and
//! the experiment catalog behind the command-line tool.

pub mod experiments;
pub mod output;
pub mod params;

use thiserror::Error;

use crate::error::LabError;

pub use experiments::{catalog, Experiment, Outcome};
pub use output::{FileEntry, Manifest, Outputs, MANIFEST_NAME};
pub use params::{parse_config_text, ExperimentConfig, ParamSpec};

/// Exit status for a bad configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a numerical divergence was detected.
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Divergence(_) => EXIT_DIVERGENCE,
            RunError::Io(_) => 1,
        }
    }
}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Divergence(m) => RunError::Divergence(m),
            other => RunError::Config(other.to_string()),
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub manifest: Manifest,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.outcome.divergence.is_some() {
            EXIT_DIVERGENCE
        } else {
            0
        }
    }
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    catalog().iter().find(|e| e.name == name)
}

/// `(name, description)` of every subcommand.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    catalog().iter().map(|e| (e.name, e.about)).collect()
}

/// Runs `cfg.command`, writing its artifacts and a manifest into
/// `cfg.out_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let exp = find(&cfg.command).ok_or_else(|| RunError::Config(format!("unknown experiment `{}`", cfg.command)))?;
    cfg.seed()?;
    let mut out = Outputs::create(&cfg.out_dir)?;
    let outcome = exp.execute(cfg, &mut out)?;
    let manifest = out.finish(cfg)?;
    Ok(RunSummary { outcome, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn config(command: &str, cli: &[(&str, &str)], dir: &std::path::Path) -> ExperimentConfig {
        let mut map: BTreeMap<String, String> = cli.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        map.insert("out".into(), dir.display().to_string());
        ExperimentConfig::resolve(command, &find(command).unwrap().params(), &BTreeMap::new(), &map).unwrap()
    }

    #[test]
    fn catalog_is_complete() {
        let names: Vec<_> = list_experiments().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            [
                "identities",
                "gamma-seq",
                "norms",
                "probe-conv",
                "probe-bilinear",
                "counterexample",
                "solve",
                "picard",
                "kdv-limit",
                "scaling-check",
                "lipschitz"
            ]
        );
        for e in catalog() {
            assert_eq!(e.params()[0].key, "seed");
        }
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("gamma-seq", &[("j-max", "256")], dir.path());
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.exit_code(), 0);
        let names: Vec<_> = summary.manifest.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, ["gamma_seq.csv", "report.json"]);
        for f in &summary.manifest.files {
            let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
            assert_eq!(f.bytes, bytes.len());
        }
        assert!(dir.path().join(MANIFEST_NAME).exists());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("counterexample", &[("example", "3")], dir.path());
        assert_eq!(run(&cfg).unwrap_err().exit_code(), EXIT_CONFIG);
        let cfg = config("counterexample", &[("b", "0.2")], dir.path());
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains('b'));
    }

    #[test]
    fn blowup_exits_with_divergence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("solve", &[("amplitude", "1e6"), ("n", "64"), ("dt", "0.1")], dir.path());
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.exit_code(), EXIT_DIVERGENCE);
    }
}
