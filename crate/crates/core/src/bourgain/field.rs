use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::pairwise_sum;
use crate::spectral::{PhaseParams, SpaceGrid};

/// Uniform lattice `τ_l = l·Δτ`, `l = -m/2, …, m/2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauLattice {
    m_points: usize,
    dtau: f64,
}

impl TauLattice {
    pub fn new(m_points: usize, dtau: f64) -> Result<Self> {
        if m_points < 8 || m_points % 2 != 0 {
            return Err(LabError::param(
                "m_points",
                format!("must be even and >= 8, got {m_points}"),
            ));
        }
        if !(dtau.is_finite() && dtau > 0.0) {
            return Err(LabError::param("dtau", format!("must be positive, got {dtau}")));
        }
        Ok(TauLattice { m_points, dtau })
    }

    /// Lattice of `m_points` values covering `[-extent, extent)`.
    pub fn covering(m_points: usize, extent: f64) -> Result<Self> {
        Self::new(m_points, 2.0 * extent / m_points as f64)
    }

    pub fn len(&self) -> usize {
        self.m_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - (self.m_points / 2) as f64) * self.dtau
    }

    /// Largest `|τ|` on the lattice.
    pub fn extent(&self) -> f64 {
        (self.m_points / 2) as f64 * self.dtau
    }
}

/// Complex function on a `(τ, ξ)` lattice; the carrier of every spacetime norm.
///
/// Values are stored row-major by `τ` index, with `ξ` in increasing order
/// (`ξ_k = k·Δξ`, `k = -n/2, …, n/2 - 1`). The base measure of each cell is
/// `Δτ·Δξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeField {
    tau: TauLattice,
    xi: SpaceGrid,
    params: PhaseParams,
    values: Vec<Complex64>,
}

impl SpacetimeField {
    pub fn zeros(tau: TauLattice, xi: SpaceGrid, params: PhaseParams) -> Self {
        SpacetimeField {
            tau,
            xi,
            params,
            values: vec![Complex64::new(0.0, 0.0); tau.len() * xi.n_points()],
        }
    }

    pub fn from_values(
        tau: TauLattice,
        xi: SpaceGrid,
        params: PhaseParams,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != tau.len() * xi.n_points() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a {}x{} lattice",
                values.len(),
                tau.len(),
                xi.n_points()
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(LabError::Invariant("spacetime field has non-finite values".into()));
        }
        Ok(SpacetimeField {
            tau,
            xi,
            params,
            values,
        })
    }

    /// Samples `f(τ, ξ)` at every cell.
    pub fn from_fn(
        tau: TauLattice,
        xi: SpaceGrid,
        params: PhaseParams,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut field = Self::zeros(tau, xi, params);
        for l in 0..tau.len() {
            let t = tau.value(l);
            for k in 0..xi.n_points() {
                let x = field.xi_value(k);
                field.values[l * xi.n_points() + k] = f(t, x);
            }
        }
        Self::from_values(tau, xi, params, field.values)
    }

    pub fn tau_lattice(&self) -> &TauLattice {
        &self.tau
    }

    pub fn xi_grid(&self) -> &SpaceGrid {
        &self.xi
    }

    pub fn params(&self) -> PhaseParams {
        self.params
    }

    pub fn n_tau(&self) -> usize {
        self.tau.len()
    }

    pub fn n_xi(&self) -> usize {
        self.xi.n_points()
    }

    pub fn tau_value(&self, l: usize) -> f64 {
        self.tau.value(l)
    }

    pub fn xi_value(&self, k: usize) -> f64 {
        (k as f64 - (self.xi.n_points() / 2) as f64) * self.xi.dxi()
    }

    /// Column index of `ξ = 0`.
    pub fn zero_xi_index(&self) -> usize {
        self.xi.n_points() / 2
    }

    pub fn cell_area(&self) -> f64 {
        self.tau.dtau() * self.xi.dxi()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, l: usize, k: usize) -> Complex64 {
        self.values[l * self.n_xi() + k]
    }

    pub fn set(&mut self, l: usize, k: usize, v: Complex64) {
        let n = self.n_xi();
        self.values[l * n + k] = v;
    }

    /// Iterates `(τ index, ξ index, τ, ξ, value)` over all cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64, Complex64)> + '_ {
        let n = self.n_xi();
        self.values.iter().enumerate().map(move |(i, v)| {
            let (l, k) = (i / n, i % n);
            (l, k, self.tau_value(l), self.xi_value(k), *v)
        })
    }

    pub fn same_lattice(&self, other: &SpacetimeField) -> bool {
        self.tau == other.tau && self.xi == other.xi && self.params == other.params
    }

    pub fn check_same_lattice(&self, other: &SpacetimeField) -> Result<()> {
        if !self.same_lattice(other) {
            return Err(LabError::GridMismatch(
                "spacetime fields live on different lattices".into(),
            ));
        }
        Ok(())
    }

    /// Squared discrete `L²_{τξ}` norm.
    pub fn l2_norm_sqr(&self) -> f64 {
        let terms: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&terms) * self.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn zero_column_vanishes(&self) -> bool {
        let k0 = self.zero_xi_index();
        (0..self.n_tau()).all(|l| self.get(l, k0) == Complex64::new(0.0, 0.0))
    }

    /// Copy keeping only the cells where `keep(τ, ξ)` holds.
    pub fn restricted(&self, mut keep: impl FnMut(f64, f64) -> bool) -> SpacetimeField {
        let mut out = self.clone();
        let n = self.n_xi();
        for (i, v) in out.values.iter_mut().enumerate() {
            if !keep(self.tau_value(i / n), self.xi_value(i % n)) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Pointwise `m(τ, ξ) · F`.
    pub fn multiplied(&self, mut m: impl FnMut(f64, f64) -> Complex64) -> SpacetimeField {
        let mut out = self.clone();
        let n = self.n_xi();
        for (i, v) in out.values.iter_mut().enumerate() {
            let w = m(self.tau_value(i / n), self.xi_value(i % n));
            *v = if *v == Complex64::new(0.0, 0.0) { *v } else { *v * w };
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> SpacetimeField {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Rescales to unit `L²` norm; the zero field is returned unchanged.
    pub fn normalized(&self) -> SpacetimeField {
        let n = self.l2_norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    /// `ξ` values of columns holding at least one nonzero value.
    pub fn xi_support(&self) -> Vec<f64> {
        (0..self.n_xi())
            .filter(|&k| (0..self.n_tau()).any(|l| self.get(l, k) != Complex64::new(0.0, 0.0)))
            .map(|k| self.xi_value(k))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }
}
