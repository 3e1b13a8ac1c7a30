use num_complex::Complex64;
use serde::Serialize;

use super::config::{Scheme, SolverConfig};
use super::integrate::{check_initial, free_trajectory, phase_factors, Trajectory};
use super::nonlinear::NonlinearOp;
use crate::error::{LabError, Result};
use crate::spectral::SpectralState;

/// Sobolev index of the contraction diagnostics.
pub const PICARD_NORM_INDEX: f64 = -0.75;
/// `d_n` below which the iteration is declared converged.
pub const PICARD_TOL: f64 = 1e-10;

/// The Duhamel map `Φ(u)(t) = e^{-itp} u0 + ½∫₀ᵗ e^{-i(t-s)p} ∂_x(u²)(s) ds`
/// on the stored time stamps, with the trapezoid rule in the interaction
/// picture. `Φ(u)(0) = u0` exactly.
pub fn picard_step(u: &Trajectory, u0: &SpectralState) -> Result<Trajectory> {
    let cfg = u.config;
    if !u.is_complete() {
        return Err(LabError::GridMismatch(format!(
            "trajectory holds {} states, expected {}",
            u.states.len(),
            cfg.steps() + 1
        )));
    }
    for (i, s) in u.states.iter().enumerate() {
        if (s.time() - cfg.time(i)).abs() > 1e-9 * cfg.dt {
            return Err(LabError::GridMismatch(format!(
                "state {i} at t = {}, expected {}",
                s.time(),
                cfg.time(i)
            )));
        }
    }
    u0.check_same_grid(u.initial())?;
    let grid = cfg.grid;
    let n = grid.n_points();
    let op = cfg.nonlinear.then(|| NonlinearOp::new(grid, cfg.dealias));
    let zero = Complex64::new(0.0, 0.0);

    let mut integral = vec![zero; n];
    let mut prev: Option<Vec<Complex64>> = None;
    let mut states = Vec::with_capacity(u.states.len());
    states.push(u0.clone().with_time(0.0));
    for (i, s) in u.states.iter().enumerate() {
        let t = cfg.time(i);
        // w(s) = e^{isp} N(u(s))
        let w: Vec<Complex64> = match &op {
            Some(op) => {
                let back = phase_factors(&grid, -t, cfg.params);
                back.iter().zip(op.apply(s)?.coeffs()).map(|(e, c)| e * c).collect()
            }
            None => vec![zero; n],
        };
        if let Some(p) = &prev {
            for k in 0..n {
                integral[k] += (p[k] + w[k]) * (0.5 * cfg.dt);
            }
            let fwd = phase_factors(&grid, t, cfg.params);
            let coeffs = (0..n).map(|k| fwd[k] * (u0.coeffs()[k] + integral[k])).collect();
            states.push(SpectralState::from_coeffs(grid, coeffs, t)?);
        }
        prev = Some(w);
    }
    Ok(Trajectory {
        states,
        config: cfg,
        diagnostic: None,
    })
}

/// `sup_t ‖Φ(u) - u‖_{H^{-3/4}}`.
pub fn fixed_point_residual(u: &Trajectory, u0: &SpectralState) -> Result<f64> {
    picard_step(u, u0)?.sup_distance(u, PICARD_NORM_INDEX)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// `d_n = sup_t ‖u^{n+1} - u^n‖_{H^{-3/4}}`.
    pub distances: Vec<f64>,
    /// `d_{n+1}/d_n`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// `d_n` increased three times in a row.
    pub diverged: bool,
}

impl PicardDiagnostics {
    /// Largest `d_{n+1}/d_n` with `n ≥ from`, ignoring steps at round-off
    /// level where the ratio carries no information.
    pub fn max_ratio_from(&self, from: usize) -> f64 {
        let floor = 1e3 * f64::EPSILON * self.distances.first().copied().unwrap_or(0.0);
        self.ratios
            .iter()
            .enumerate()
            .skip(from)
            .filter(|&(n, _)| self.distances[n + 1] > floor)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }

    /// Once a ratio drops below 1 it stays below 1.
    pub fn monotone_contraction(&self) -> bool {
        let floor = 1e3 * f64::EPSILON * self.distances.first().copied().unwrap_or(0.0);
        let mut contracting = false;
        for (n, r) in self.ratios.iter().enumerate() {
            if self.distances[n + 1] <= floor {
                break;
            }
            if contracting && *r >= 1.0 {
                return false;
            }
            contracting |= *r < 1.0;
        }
        true
    }
}

/// Iterates `Φ` from the free solution until `d_n < 1e-10` or
/// `config.picard_iters` iterations. Divergence is reported in the
/// diagnostics, not raised.
pub fn solve_picard(u0: &SpectralState, cfg: &SolverConfig) -> Result<(Trajectory, PicardDiagnostics)> {
    check_initial(u0, cfg)?;
    if cfg.scheme != Scheme::Picard {
        return Err(LabError::param("scheme", "solve_picard needs the PICARD scheme"));
    }
    let mut u = free_trajectory(u0, cfg)?;
    let mut distances: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    while distances.len() < cfg.picard_iters {
        let next = picard_step(&u, u0)?;
        let d = next.sup_distance(&u, PICARD_NORM_INDEX)?;
        distances.push(d);
        u = next;
        if !d.is_finite() {
            diverged = true;
            break;
        }
        if d < PICARD_TOL {
            converged = true;
            break;
        }
        let k = distances.len();
        if k >= 4 && distances[k - 4..].windows(2).all(|w| w[1] > w[0]) {
            diverged = true;
            break;
        }
    }
    let ratios = distances.windows(2).map(|w| w[1] / w[0]).collect();
    if diverged {
        u.diagnostic = Some(format!("Picard iteration diverging after {} iterations", distances.len()));
    }
    Ok((
        u,
        PicardDiagnostics {
            iterations: distances.len(),
            distances,
            ratios,
            converged,
            diverged,
        },
    ))
}
