use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use super::field::SpacetimeField;
use crate::error::{LabError, Result};
use crate::numerics::{bracket, pairwise_sum};
use crate::spectral::PhaseParams;

/// Unique `j ≥ 0` with `2^j ≤ v < 2^{j+1}` for `v ≥ 1`.
fn dyadic_floor(v: f64) -> u32 {
    debug_assert!(v >= 1.0);
    let mut j = v.log2().floor().max(0.0) as i32;
    while j > 0 && 2f64.powi(j) > v {
        j -= 1;
    }
    while 2f64.powi(j + 1) <= v {
        j += 1;
    }
    j as u32
}

/// Frequency shell index: `2^j ≤ ⟨ξ⟩ < 2^{j+1}`.
pub fn dyadic_index_xi(xi: f64) -> u32 {
    dyadic_floor(bracket(xi))
}

/// Modulation `τ − p(ξ)`.
pub fn modulation(tau: f64, xi: f64, params: PhaseParams) -> Result<f64> {
    if xi == 0.0 {
        return Err(LabError::Domain("modulation is undefined at xi = 0".into()));
    }
    Ok(tau - params.eval_unchecked(xi))
}

/// Modulation shell index: `2^k ≤ ⟨τ − p(ξ)⟩ < 2^{k+1}`.
pub fn dyadic_index_mod(tau: f64, xi: f64, params: PhaseParams) -> Result<u32> {
    Ok(dyadic_floor(bracket(modulation(tau, xi, params)?)))
}

/// Membership in `D = {|ξ| ≤ 1/8, |τ| ≥ |ξ|^{-3}}`; `ξ = 0` is never in `D`.
pub fn in_region_d(tau: f64, xi: f64) -> bool {
    if xi == 0.0 || xi.abs() > 0.125 {
        return false;
    }
    tau.abs() >= xi.abs().powi(-3)
}

/// `L²` masses of a field over the cells `A_j ∩ B_k` and over `D`, `D^c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDecomposition {
    /// `‖F‖_{L²(A_j ∩ B_k)}` for every populated `(j, k)`.
    pub masses: BTreeMap<(u32, u32), f64>,
    pub d_mass: f64,
    pub dc_mass: f64,
    /// Mass on the `ξ = 0` column, where the modulation shell is undefined.
    pub singular_mass: f64,
}

impl BlockDecomposition {
    pub fn total_mass_sqr(&self) -> f64 {
        let v: Vec<f64> = self.masses.values().map(|m| m * m).collect();
        pairwise_sum(&v) + self.singular_mass * self.singular_mass
    }

    /// Number of distinct modulation shells populated.
    pub fn populated_k_shells(&self) -> usize {
        let mut ks: Vec<u32> = self.masses.keys().map(|(_, k)| *k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks.len()
    }

    /// Writes `j,k,mass` rows with a header.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["j", "k", "mass"])?;
        for ((j, k), m) in &self.masses {
            out.write_record([j.to_string(), k.to_string(), format!("{m:e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Partitions the squared `L²` mass of `F` over dyadic cells and over `D`.
pub fn decompose(field: &SpacetimeField) -> BlockDecomposition {
    let area = field.cell_area();
    let params = field.params();
    let mut cells: BTreeMap<(u32, u32), Vec<f64>> = BTreeMap::new();
    let mut d = Vec::new();
    let mut dc = Vec::new();
    let mut singular = Vec::new();
    for (_, _, tau, xi, v) in field.cells() {
        let m2 = v.norm_sqr() * area;
        if m2 == 0.0 {
            continue;
        }
        if in_region_d(tau, xi) {
            d.push(m2);
        } else {
            dc.push(m2);
        }
        match dyadic_index_mod(tau, xi, params) {
            Ok(k) => cells.entry((dyadic_index_xi(xi), k)).or_default().push(m2),
            Err(_) => singular.push(m2),
        }
    }
    BlockDecomposition {
        masses: cells
            .into_iter()
            .map(|(key, v)| (key, pairwise_sum(&v).sqrt()))
            .collect(),
        d_mass: pairwise_sum(&d).sqrt(),
        dc_mass: pairwise_sum(&dc).sqrt(),
        singular_mass: pairwise_sum(&singular).sqrt(),
    }
}
