use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::RunError;

/// One tunable of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: String,
    pub help: &'static str,
}

impl ParamSpec {
    pub fn new(key: &'static str, default: impl ToString, help: &'static str) -> Self {
        ParamSpec {
            key,
            default: default.to_string(),
            help,
        }
    }
}

/// Parses a flat `key = value` file. `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, RunError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| RunError::Config(format!("config line {}: expected key=value, got `{line}`", no + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(RunError::Config(format!("config line {}: empty key", no + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Resolved inputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    /// Every parameter of the command, including `seed`.
    pub params: BTreeMap<String, String>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults, then `file`, then `cli`; the later source wins. Keys unknown
    /// to the command are rejected. `out` selects the output directory.
    pub fn resolve(
        command: &str,
        specs: &[ParamSpec],
        file: &BTreeMap<String, String>,
        cli: &BTreeMap<String, String>,
    ) -> Result<Self, RunError> {
        let mut params: BTreeMap<String, String> =
            specs.iter().map(|p| (p.key.to_string(), p.default.clone())).collect();
        let mut out_dir = PathBuf::from("runs").join(command);
        for source in [file, cli] {
            for (k, v) in source {
                if k == "out" {
                    out_dir = PathBuf::from(v);
                } else if params.contains_key(k) {
                    params.insert(k.clone(), v.clone());
                } else {
                    return Err(RunError::Config(format!("unknown parameter `{k}` for `{command}`")));
                }
            }
        }
        Ok(ExperimentConfig {
            command: command.to_string(),
            params,
            out_dir,
        })
    }

    /// `key=value` lines in key order.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (k, v) in &self.params {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn inputs_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    fn raw(&self, key: &str) -> Result<&str, RunError> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| RunError::Config(format!("missing parameter `{key}`")))
    }

    pub fn get_str(&self, key: &str) -> Result<&str, RunError> {
        self.raw(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, RunError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key)?;
        v.trim()
            .parse()
            .map_err(|e| RunError::Config(format!("invalid value `{v}` for `{key}`: {e}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, RunError> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return Err(RunError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64, RunError> {
        self.get("seed")
    }

    /// Comma-separated list; integer ranges `a..b` (inclusive) are expanded.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, RunError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        let bad = |item: &str, why: String| RunError::Config(format!("invalid item `{item}` in `{key}`: {why}"));
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((a, b)) = item.split_once("..") {
                let lo: i64 = a.trim().parse().map_err(|e| bad(item, format!("{e}")))?;
                let hi: i64 = b.trim().parse().map_err(|e| bad(item, format!("{e}")))?;
                if hi < lo {
                    return Err(bad(item, "empty range".into()));
                }
                for v in lo..=hi {
                    out.push(v.to_string().parse().map_err(|e| bad(item, format!("{e}")))?);
                }
            } else {
                out.push(item.parse().map_err(|e| bad(item, format!("{e}")))?);
            }
        }
        if out.is_empty() {
            return Err(RunError::Config(format!("`{key}` must be a nonempty list")));
        }
        Ok(out)
    }
}
