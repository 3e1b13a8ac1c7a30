use rayon::prelude::*;
use serde::Serialize;

use super::config::SolverConfig;
use super::data::resample;
use super::integrate::{solve, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{PhaseParams, SpaceGrid, SpectralState};

/// Critical Sobolev index.
pub const CRITICAL_INDEX: f64 = -0.75;

/// `u_λ0(x) = λ^{-2} u0(x/λ)` on the period `λL`: the integer-indexed
/// coefficients are multiplied by `λ^{-2}`, which is `û_λ0(ξ) = λ^{-1}û0(λξ)`
/// on the line.
pub fn rescale_initial(u0: &SpectralState, lambda: f64) -> Result<SpectralState> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(LabError::param("lambda", format!("must be >= 1, got {lambda}")));
    }
    let g = u0.grid();
    let grid = SpaceGrid::new(g.n_points(), g.domain_length() * lambda)?;
    SpectralState::from_coeffs(grid, u0.scaled(lambda.powi(-2)).into_coeffs(), u0.time())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub norm: f64,
    /// `λ^{-3/4}‖u0‖_{H^{-3/4}}`.
    pub bound: f64,
}

impl ScalingRow {
    pub fn holds(&self) -> bool {
        self.norm <= self.bound * (1.0 + 1e-12)
    }
}

pub fn scaling_check(u0: &SpectralState, lambdas: &[f64]) -> Result<Vec<ScalingRow>> {
    let base = u0.hs_norm(CRITICAL_INDEX);
    lambdas
        .iter()
        .map(|&lambda| {
            Ok(ScalingRow {
                lambda,
                norm: rescale_initial(u0, lambda)?.hs_norm(CRITICAL_INDEX),
                bound: lambda.powf(CRITICAL_INDEX) * base,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdvLimitRow {
    pub gamma: f64,
    /// `sup_t ‖u_γ - u_KdV‖_{L²}`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdvLimitReport {
    pub n_points: usize,
    pub rows: Vec<KdvLimitRow>,
}

impl KdvLimitReport {
    pub fn nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error <= w[0].error)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// Largest relative change of `e(γ)` against another report.
    pub fn max_relative_change(&self, other: &KdvLimitReport) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                if a.error == 0.0 && b.error == 0.0 {
                    0.0
                } else {
                    (a.error - b.error).abs() / a.error.max(b.error)
                }
            })
            .fold(0.0, f64::max)
    }
}

fn solve_checked(u0: &SpectralState, cfg: &SolverConfig) -> Result<Trajectory> {
    let traj = solve(u0, cfg)?;
    traj.check_blowup()?;
    Ok(traj)
}

/// `e(γ)` against the `γ = 0` run for each entry of `gammas` (nonnegative,
/// strictly decreasing). `config.params.beta` is kept.
pub fn kdv_limit_experiment(u0: &SpectralState, gammas: &[f64], cfg: &SolverConfig) -> Result<KdvLimitReport> {
    if gammas.is_empty() {
        return Err(LabError::param("gamma_list", "must be nonempty"));
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) || gammas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::param("gamma_list", "must be nonnegative and strictly decreasing"));
    }
    let with_gamma = |gamma: f64| PhaseParams::new(cfg.params.beta, gamma);
    let kdv = solve_checked(u0, &cfg.with_params(with_gamma(0.0)?))?;
    let rows = gammas
        .par_iter()
        .map(|&gamma| {
            let run = solve_checked(u0, &cfg.with_params(with_gamma(gamma)?))?;
            Ok(KdvLimitRow {
                gamma,
                error: run.sup_distance(&kdv, 0.0)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KdvLimitReport {
        n_points: cfg.grid.n_points(),
        rows,
    })
}

/// Reruns [`kdv_limit_experiment`] with twice the spatial resolution and
/// returns both reports.
pub fn kdv_limit_grid_check(
    u0: &SpectralState,
    gammas: &[f64],
    cfg: &SolverConfig,
) -> Result<(KdvLimitReport, KdvLimitReport)> {
    let coarse = kdv_limit_experiment(u0, gammas, cfg)?;
    let fine_u0 = resample(u0, 2 * cfg.grid.n_points())?;
    let fine = kdv_limit_experiment(&fine_u0, gammas, &cfg.with_grid(*fine_u0.grid()))?;
    Ok((coarse, fine))
}

/// `sup_t ‖u(u0 + δw) - u(u0)‖_{H^{-3/4}} / (δ‖w‖_{H^{-3/4}})`.
pub fn lipschitz_probe(u0: &SpectralState, w: &SpectralState, delta: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(lipschitz_sweep(u0, w, &[delta], cfg)?.rows[0].ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzRow {
    pub delta: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzReport {
    /// `(max - min)/min` over the ratios.
    pub fn variation(&self) -> f64 {
        let lo = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        (hi - lo) / lo
    }
}

pub fn lipschitz_sweep(u0: &SpectralState, w: &SpectralState, deltas: &[f64], cfg: &SolverConfig) -> Result<LipschitzReport> {
    if deltas.is_empty() || deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(LabError::param("delta", "need a nonempty list of positive values"));
    }
    let wn = w.hs_norm(CRITICAL_INDEX);
    if !w.is_mean_zero() || wn == 0.0 {
        return Err(LabError::param("direction", "must be nonzero and mean-zero"));
    }
    let w = w.scaled(1.0 / wn);
    let base = solve_checked(u0, cfg)?;
    let rows = deltas
        .par_iter()
        .map(|&delta| {
            let perturbed = solve_checked(&u0.axpy(delta, &w)?, cfg)?;
            Ok(LipschitzRow {
                delta,
                ratio: perturbed.sup_distance(&base, CRITICAL_INDEX)? / delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::data::{builtin_data, BuiltinData};

    fn grid() -> SpaceGrid {
        SpaceGrid::with_default_length(128).unwrap()
    }

    #[test]
    fn rescale_identity_and_bound() {
        let u0 = builtin_data(BuiltinData::Gaussian, grid(), 1.0, 0).unwrap();
        let same = rescale_initial(&u0, 1.0).unwrap();
        assert_eq!(same, u0);
        let rows = scaling_check(&u0, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]).unwrap();
        assert!(rows.iter().all(ScalingRow::holds));
        let scaled: Vec<f64> = rows.iter().map(|r| r.norm * r.lambda.powf(0.75)).collect();
        assert!(scaled.windows(2).all(|w| w[1] < w[0]));
        assert!(rescale_initial(&u0, 0.5).is_err());
        assert!(rescale_initial(&u0, 3.0).unwrap().is_mean_zero());
    }

    #[test]
    fn rescale_matches_physical_space() {
        // λ^{-2} u0(x/λ) sampled on the stretched grid has the same samples
        // scaled by λ^{-2}.
        let u0 = builtin_data(BuiltinData::Sech2, grid(), 1.0, 0).unwrap();
        let lam = 3.0;
        let v = rescale_initial(&u0, lam).unwrap();
        let a = crate::spectral::inverse_transform(&u0);
        let b = crate::spectral::inverse_transform(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x / (lam * lam) - y).abs() < 1e-14);
        }
        assert_eq!(v.grid().domain_length(), 3.0 * grid().domain_length());
    }

    #[test]
    fn kdv_limit_zero_gamma_and_ordering() {
        let u0 = builtin_data(BuiltinData::Gaussian, grid(), 0.5, 0).unwrap();
        let cfg = SolverConfig::new(grid(), 1e-2, 0.5, PhaseParams::default()).unwrap();
        let rep = kdv_limit_experiment(&u0, &[0.1, 0.01, 0.0], &cfg).unwrap();
        assert_eq!(rep.rows[2].error, 0.0);
        assert!(rep.strictly_decreasing(), "{rep:?}");
        assert!(kdv_limit_experiment(&u0, &[0.01, 0.1], &cfg).is_err());
    }

    #[test]
    fn lipschitz_zero_data_is_unitary() {
        let g = grid();
        let cfg = SolverConfig::new(g, 1e-2, 0.5, PhaseParams::default()).unwrap();
        let w = builtin_data(BuiltinData::RandomBand, g, 1.0, 3).unwrap();
        let rep = lipschitz_sweep(&SpectralState::zeros(g), &w, &[1e-2, 1e-3, 1e-4], &cfg).unwrap();
        for r in &rep.rows {
            assert!((r.ratio - 1.0).abs() < 10.0 * r.delta, "{r:?}");
        }
    }

    #[test]
    fn lipschitz_stable_under_refinement() {
        let g = grid();
        let cfg = SolverConfig::new(g, 1e-2, 0.5, PhaseParams::default()).unwrap();
        let u0 = builtin_data(BuiltinData::Gaussian, g, 0.2, 0).unwrap();
        let rep = lipschitz_sweep(&u0, &u0, &[1e-2, 1e-3, 1e-4], &cfg).unwrap();
        assert!(rep.variation() < 0.2, "{rep:?}");
        assert!(rep.rows.iter().all(|r| (r.ratio - 1.0).abs() < 0.5));
    }
}
