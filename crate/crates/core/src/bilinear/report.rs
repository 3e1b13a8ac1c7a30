use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use crate::numerics::{fit_log2_slope, SlopeFit};

/// Aggregated ratios at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub scale: f64,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub samples: usize,
}

impl ScaleRow {
    /// Row from raw per-sample ratios.
    pub fn from_ratios(scale: f64, ratios: &[f64]) -> Self {
        let mut sorted = ratios.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = match sorted.len() {
            0 => 0.0,
            n if n % 2 == 1 => sorted[n / 2],
            n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        ScaleRow {
            scale,
            max_ratio: sorted.last().copied().unwrap_or(0.0),
            median_ratio: median,
            samples: ratios.len(),
        }
    }
}

/// Per-scale empirical `LHS/RHS` ratios of an inequality probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub name: String,
    pub seed: u64,
    pub rows: Vec<ScaleRow>,
    /// Fit of `log₂ max_ratio` against `log₂ scale`; present with three or
    /// more scales.
    pub fit: Option<SlopeFit>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl ProbeReport {
    pub fn new(name: impl Into<String>, seed: u64, rows: Vec<ScaleRow>) -> Self {
        let xs: Vec<f64> = rows.iter().map(|r| r.scale).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.max_ratio).collect();
        ProbeReport {
            name: name.into(),
            seed,
            fit: fit_log2_slope(&xs, &ys),
            rows,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    /// Largest `max_ratio(later) / max_ratio(earlier)` over ordered pairs of
    /// scales; `1` for a single scale, `0` when every ratio vanishes.
    pub fn growth_factor(&self) -> f64 {
        let mut worst: f64 = if self.rows.iter().all(|r| r.max_ratio == 0.0) {
            0.0
        } else {
            1.0
        };
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                if a.max_ratio > 0.0 {
                    worst = worst.max(b.max_ratio / a.max_ratio);
                } else if b.max_ratio > 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
        worst
    }

    /// Whether the max ratio never grows by more than `factor` across scales.
    pub fn bounded(&self, factor: f64) -> bool {
        self.growth_factor() <= factor
    }

    pub fn all_finite(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.max_ratio.is_finite() && r.max_ratio >= 0.0 && r.median_ratio.is_finite())
    }

    /// CSV with columns `scale,max_ratio,median_ratio,samples`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}
