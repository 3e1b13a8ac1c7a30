//! Periodic spatial grids, the Ostrovsky phase function, Fourier multipliers
//! and the free evolution group.
//!
//! Coefficients are stored in FFT order (`k = 0, 1, …, n/2-1, -n/2, …, -1`)
//! and follow the convention `u(x) = Σ_k c_k e^{i ξ_k x}` with
//! `ξ_k = 2πk/L`. Sobolev norms use the torus Plancherel identity
//! `‖u‖²_{L²} = L Σ |c_k|²`, so they approximate the corresponding norms
//! on the line for large periods.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{bracket, pairwise_sum};

/// Default period `2π·32`: the smallest nonzero frequency is `1/32`.
pub const DEFAULT_DOMAIN_LENGTH: f64 = 2.0 * PI * 32.0;

/// Uniform periodic grid of `n` points on `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    n_points: usize,
    domain_length: f64,
}

impl SpaceGrid {
    pub fn new(n_points: usize, domain_length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(LabError::param(
                "n_points",
                format!("must be a power of two >= 8, got {n_points}"),
            ));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(LabError::param(
                "domain_length",
                format!("must be positive and finite, got {domain_length}"),
            ));
        }
        Ok(SpaceGrid {
            n_points,
            domain_length,
        })
    }

    /// Grid with the default period [`DEFAULT_DOMAIN_LENGTH`].
    pub fn with_default_length(n_points: usize) -> Result<Self> {
        Self::new(n_points, DEFAULT_DOMAIN_LENGTH)
    }

    /// Grid whose frequency spacing is `dxi`.
    pub fn with_frequency_spacing(n_points: usize, dxi: f64) -> Result<Self> {
        if !(dxi.is_finite() && dxi > 0.0) {
            return Err(LabError::param("dxi", format!("must be positive, got {dxi}")));
        }
        Self::new(n_points, 2.0 * PI / dxi)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// Frequency spacing `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.n_points as f64
    }

    /// Integer wavenumber of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n_points as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot holding wavenumber `k` (`-n/2 ≤ k < n/2`).
    pub fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n_points as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    /// Index of the unpaired Nyquist mode `k = -n/2`.
    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }

    pub fn frequency(&self, idx: usize) -> f64 {
        self.wavenumber(idx) as f64 * self.dxi()
    }

    /// Frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.frequency(i)).collect()
    }

    /// Frequencies in increasing order, `k = -n/2, …, n/2 - 1`.
    pub fn sorted_frequencies(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        (-n / 2..n / 2).map(|k| k as f64 * self.dxi()).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points).map(|m| m as f64 * dx).collect()
    }
}

impl fmt::Display for SpaceGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceGrid(n={}, L={})", self.n_points, self.domain_length)
    }
}

/// Dispersion parameters. Only negative dispersion is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for PhaseParams {
    fn default() -> Self {
        PhaseParams {
            beta: -1.0,
            gamma: 1.0,
        }
    }
}

impl PhaseParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta < 0.0 && beta.is_finite()) {
            return Err(LabError::param("beta", format!("must be negative, got {beta}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(LabError::param("gamma", format!("must be >= 0, got {gamma}")));
        }
        Ok(PhaseParams { beta, gamma })
    }

    /// `β = -1` with the given rotation strength.
    pub fn with_gamma(gamma: f64) -> Result<Self> {
        Self::new(-1.0, gamma)
    }

    /// Pure KdV phase `ξ³`.
    pub fn kdv() -> Self {
        PhaseParams {
            beta: -1.0,
            gamma: 0.0,
        }
    }

    /// `p(ξ)` without the domain check; `ξ = 0` yields a non-finite value.
    #[inline]
    pub fn eval_unchecked(&self, xi: f64) -> f64 {
        -self.beta * (xi * xi * xi) - self.gamma / xi
    }
}

/// The phase `p(ξ) = -β ξ³ - γ/ξ`, i.e. `ξ³ - 1/ξ` for the normalized equation.
pub fn phase(xi: f64, params: PhaseParams) -> Result<f64> {
    if xi == 0.0 {
        return Err(LabError::Domain("phase is singular at xi = 0".into()));
    }
    Ok(params.eval_unchecked(xi))
}

/// Fourier coefficients of `u(·, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    grid: SpaceGrid,
    coeffs: Vec<Complex64>,
    time: f64,
}

impl SpectralState {
    pub fn zeros(grid: SpaceGrid) -> Self {
        SpectralState {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()],
            time: 0.0,
        }
    }

    pub fn from_coeffs(grid: SpaceGrid, coeffs: Vec<Complex64>, time: f64) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(LabError::GridMismatch(format!(
                "{} coefficients for {grid}",
                coeffs.len()
            )));
        }
        Ok(SpectralState { grid, coeffs, time })
    }

    /// State with a single real mode `c_k = c_{-k}^* = amp`.
    pub fn single_mode(grid: SpaceGrid, k: i64, amp: Complex64) -> Result<Self> {
        let mut s = Self::zeros(grid);
        let slot = grid
            .slot(k)
            .ok_or_else(|| LabError::param("k", format!("wavenumber {k} not on {grid}")))?;
        s.coeffs[slot] = amp;
        if k != 0 {
            if let Some(m) = grid.slot(-k) {
                s.coeffs[m] = amp.conj();
            }
        }
        Ok(s)
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    /// Zeroes the `ξ = 0` coefficient.
    pub fn with_mean_removed(mut self) -> Self {
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        self
    }

    /// Checks `c(-ξ) = conj(c(ξ))` up to `tol` (absolute, scaled by the largest
    /// coefficient). The Nyquist slot must be real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let n = self.grid.n_points() as i64;
        for k in 0..n / 2 {
            let a = self.coeffs[self.grid.slot(k).unwrap()];
            let b = self.coeffs[self.grid.slot(-k).unwrap()];
            if (a - b.conj()).norm() > tol * scale {
                return false;
            }
        }
        self.coeffs[self.grid.nyquist_slot()].im.abs() <= tol * scale
    }

    /// `‖u‖_{H^s} = (L Σ ⟨ξ⟩^{2s} |c_k|²)^{1/2}`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| bracket(self.grid.frequency(i)).powf(2.0 * s) * c.norm_sqr())
            .collect();
        (self.grid.domain_length() * pairwise_sum(&terms)).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.hs_norm(0.0)
    }

    /// `H^s` distance to another state on the same grid.
    pub fn hs_distance(&self, other: &SpectralState, s: f64) -> Result<f64> {
        self.check_same_grid(other)?;
        let diff: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SpectralState::from_coeffs(self.grid, diff, self.time)?.hs_norm(s))
    }

    pub fn check_same_grid(&self, other: &SpectralState) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch(format!(
                "{} vs {}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &SpectralState) -> Result<SpectralState> {
        self.check_same_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        SpectralState::from_coeffs(self.grid, coeffs, self.time)
    }

    pub fn scaled(&self, a: f64) -> SpectralState {
        SpectralState {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Multiplies every coefficient by `exp(-i t p(ξ))`; the `ξ = 0` slot is left
/// untouched.
pub fn free_evolution(state: &SpectralState, t: f64, params: PhaseParams) -> SpectralState {
    let grid = *state.grid();
    let coeffs = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = grid.frequency(i);
            if xi == 0.0 {
                *c
            } else {
                c * Complex64::from_polar(1.0, -t * params.eval_unchecked(xi))
            }
        })
        .collect();
    SpectralState {
        grid,
        coeffs,
        time: state.time() + t,
    }
}

/// Fourier multipliers available to [`apply_multiplier`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    /// `∂_x`, symbol `iξ`.
    Dx,
    /// `∂_x³`, symbol `-iξ³`.
    Dx3,
    /// `∂_x^{-1}`, symbol `1/(iξ)`; defined on mean-zero states only.
    DxInv,
    /// `|ξ|^a`.
    AbsPow(f64),
    /// `⟨ξ⟩^s`.
    Bracket(f64),
}

impl Multiplier {
    fn is_odd_derivative(&self) -> bool {
        matches!(self, Multiplier::Dx | Multiplier::Dx3 | Multiplier::DxInv)
    }

    fn symbol(&self, xi: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match *self {
            Multiplier::Dx => i * xi,
            Multiplier::Dx3 => -i * (xi * xi * xi),
            Multiplier::DxInv => -i / xi,
            Multiplier::AbsPow(a) => Complex64::new(xi.abs().powf(a), 0.0),
            Multiplier::Bracket(s) => Complex64::new(bracket(xi).powf(s), 0.0),
        }
    }
}

/// Pointwise multiplication of the coefficients by the symbol of `m`.
///
/// The `ξ = 0` output is zero for the derivative-type symbols (and for
/// `|ξ|^a` with `a ≠ 0`). Odd-order derivatives also zero the unpaired
/// Nyquist mode so real fields stay real.
pub fn apply_multiplier(state: &SpectralState, m: Multiplier) -> Result<SpectralState> {
    let needs_mean_zero = matches!(m, Multiplier::DxInv)
        || matches!(m, Multiplier::AbsPow(a) if a < 0.0);
    if needs_mean_zero && !state.is_mean_zero() {
        return Err(LabError::Invariant(format!(
            "{m:?} requires a mean-zero state (c_0 = {})",
            state.coeffs()[0]
        )));
    }
    let grid = *state.grid();
    let nyq = grid.nyquist_slot();
    let coeffs = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = grid.frequency(i);
            if xi == 0.0 {
                return match m {
                    Multiplier::Bracket(_) | Multiplier::AbsPow(0.0) => *c,
                    _ => Complex64::new(0.0, 0.0),
                };
            }
            if i == nyq && m.is_odd_derivative() {
                return Complex64::new(0.0, 0.0);
            }
            c * m.symbol(xi)
        })
        .collect();
    SpectralState::from_coeffs(grid, coeffs, state.time())
}

/// `c_k = (1/n) Σ_m u(x_m) e^{-i ξ_k x_m}`.
pub fn forward_transform(grid: SpaceGrid, samples: &[f64]) -> Result<SpectralState> {
    if samples.len() != grid.n_points() {
        return Err(LabError::GridMismatch(format!(
            "{} samples for {grid}",
            samples.len()
        )));
    }
    let n = grid.n_points();
    let mut buf: Vec<Complex64> = samples.iter().map(|&u| Complex64::new(u, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralState::from_coeffs(grid, buf, 0.0)
}

/// Inverse of [`forward_transform`]; returns the real part of the synthesis.
pub fn inverse_transform(state: &SpectralState) -> Vec<f64> {
    let mut buf = state.coeffs().to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
