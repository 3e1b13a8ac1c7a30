use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::field::{SpacetimeField, TauLattice};
use super::norms::{mixed_l2_lp, norm, xmod_parts, NormSpec};
use crate::error::{LabError, Result};
use crate::spectral::{free_evolution, PhaseParams, SpectralState};

/// The three ratios of the embedding properties of the modified space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingRatios {
    /// `‖F‖_X / ‖F‖_{X^{-3/4,b}}`.
    pub x_over_xsb: f64,
    /// `‖⟨ξ⟩^{-3/4}F‖_{L²_ξL^p_τ} / ‖F‖_X`.
    pub lp_over_x: f64,
    /// `‖F‖_Y / ‖F‖_{X^{-3/4,1/2,1}}`.
    pub y_over_xsb1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evaluates the embedding ratios for one field; `b > 1/2`, `1 < p ≤ 2`.
pub fn probe_embedding_29(field: &SpacetimeField, b: f64, p: f64) -> Result<EmbeddingRatios> {
    if !(b > 0.5 && b.is_finite()) {
        return Err(LabError::param("b", format!("the X embedding needs b > 1/2, got {b}")));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(LabError::param("p", format!("must lie in (1, 2], got {p}")));
    }
    let x = norm(field, NormSpec::xmod())?;
    let xsb = norm(field, NormSpec::xsb(-0.75, b))?;
    let lp = mixed_l2_lp(field, -0.75, p)?;
    let y = norm(field, NormSpec::y())?;
    let xsb1 = norm(field, NormSpec::xsb1(-0.75, 0.5))?;
    Ok(EmbeddingRatios {
        x_over_xsb: ratio(x, xsb),
        lp_over_x: ratio(lp, x),
        y_over_xsb1: ratio(y, xsb1),
    })
}

fn smooth_step(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

/// Smooth cutoff supported in `[-1, 2]` and equal to `1` on `[0, 1]`.
pub fn cutoff_psi(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        1.0
    } else if x > 1.0 {
        let (a, b) = (smooth_step(2.0 - x), smooth_step(x - 1.0));
        if a == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    } else {
        let (a, b) = (smooth_step(x + 1.0), smooth_step(-x));
        if a == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    }
}

/// Result of [`restriction_norm_upper`].
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionBound {
    /// `X` norm of the windowed extension; an upper bound for `‖u‖_{X_T}`.
    pub value: f64,
    pub dc_part: f64,
    pub d_part: f64,
    pub time_samples: usize,
    /// Whether every characteristic `τ = p(ξ)` of the grid fits in the `τ` box.
    pub tau_extent_ok: bool,
}

/// Builds the spacetime transform of `χ(t)·v(t)`, where `v` agrees with the
/// trajectory on `[-T, T]`, continues by free evolution outside, and
/// `χ(t) = ψ(|t|/T)`.
///
/// `states` must be uniformly spaced in time and cover `[-T, T]`.
pub fn windowed_extension(
    states: &[SpectralState],
    t_half: f64,
    params: PhaseParams,
) -> Result<SpacetimeField> {
    if !(t_half > 0.0 && t_half.is_finite()) {
        return Err(LabError::param("T", format!("must be positive, got {t_half}")));
    }
    if states.len() < 2 {
        return Err(LabError::param("trajectory", "needs at least two states"));
    }
    let grid = *states[0].grid();
    let dt = states[1].time() - states[0].time();
    if !(dt > 0.0) {
        return Err(LabError::param("trajectory", "time stamps must increase"));
    }
    for (i, s) in states.iter().enumerate() {
        s.check_same_grid(&states[0])?;
        if !s.is_mean_zero() {
            return Err(LabError::Invariant(format!("state {i} is not mean-zero")));
        }
        let expect = states[0].time() + i as f64 * dt;
        if (s.time() - expect).abs() > 1e-9 * dt.max(1.0) {
            return Err(LabError::param("trajectory", format!("non-uniform time stamp at {i}")));
        }
    }
    let (t_first, t_last) = (states[0].time(), states[states.len() - 1].time());
    let slack = 1e-9 * dt;
    if t_first > -t_half + slack || t_last < t_half - slack {
        return Err(LabError::param(
            "trajectory",
            format!("covers [{t_first}, {t_last}], not [-{t_half}, {t_half}]"),
        ));
    }

    let m = ((8.0 * t_half / dt).ceil() as usize).next_power_of_two().max(8);
    let n = grid.n_points();
    // time-major samples: rows m (time), columns FFT-ordered ξ slots
    let mut samples = vec![Complex64::new(0.0, 0.0); m * n];
    for row in 0..m {
        let t = (row as f64 - (m / 2) as f64) * dt;
        let chi = cutoff_psi(t.abs() / t_half);
        if chi == 0.0 {
            continue;
        }
        let state = if t < t_first {
            free_evolution(&states[0], t - t_first, params)
        } else if t > t_last {
            free_evolution(&states[states.len() - 1], t - t_last, params)
        } else {
            let i = ((t - t_first) / dt).round() as usize;
            let s = &states[i.min(states.len() - 1)];
            if (s.time() - t).abs() > 1e-6 * dt {
                return Err(LabError::param(
                    "trajectory",
                    format!("time stamps are not aligned with multiples of dt = {dt}"),
                ));
            }
            free_evolution(s, t - s.time(), params)
        };
        for (slot, c) in state.coeffs().iter().enumerate() {
            samples[row * n + slot] = c * chi;
        }
    }

    let fft = FftPlanner::new().plan_fft_inverse(m);
    let scale = grid.domain_length() * dt / (2.0 * PI);
    let tau = TauLattice::new(m, 2.0 * PI / (m as f64 * dt))?;
    let mut field = SpacetimeField::zeros(tau, grid, params);
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for kk in 0..n {
        let wavenumber = kk as i64 - (n / 2) as i64;
        let slot = grid.slot(wavenumber).expect("sorted index maps to a slot");
        for (row, c) in column.iter_mut().enumerate() {
            let sign = if row % 2 == 0 { 1.0 } else { -1.0 };
            *c = samples[row * n + slot] * sign;
        }
        fft.process(&mut column);
        for (l, c) in column.iter().enumerate() {
            let sign = if l % 2 == 0 { scale } else { -scale };
            field.set(l, kk, c * sign);
        }
    }
    Ok(field)
}

/// Upper bound for the restriction norm `‖u‖_{X_T}` (an infimum over all
/// extensions) by the `X` norm of one explicit extension, see
/// [`windowed_extension`].
pub fn restriction_norm_upper(
    states: &[SpectralState],
    t_half: f64,
    params: PhaseParams,
) -> Result<RestrictionBound> {
    let field = windowed_extension(states, t_half, params)?;
    let (dc_part, d_part) = xmod_parts(&field)?;
    let grid = states[0].grid();
    let max_phase = grid
        .frequencies()
        .into_iter()
        .filter(|&x| x != 0.0)
        .map(|x| params.eval_unchecked(x).abs())
        .fold(0.0, f64::max);
    Ok(RestrictionBound {
        value: dc_part + d_part,
        dc_part,
        d_part,
        time_samples: field.n_tau(),
        tau_extent_ok: max_phase < field.tau_lattice().extent(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bourgain::dyadic::in_region_d;
    use crate::spectral::SpaceGrid;

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff_psi(0.0), 1.0);
        assert_eq!(cutoff_psi(1.0), 1.0);
        assert_eq!(cutoff_psi(0.5), 1.0);
        assert_eq!(cutoff_psi(2.0), 0.0);
        assert_eq!(cutoff_psi(-1.0), 0.0);
        assert_eq!(cutoff_psi(5.0), 0.0);
        assert!((cutoff_psi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = cutoff_psi(1.0 + i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn embedding_rejects_small_b_and_handles_zero() {
        let t = TauLattice::new(16, 1.0).unwrap();
        let x = SpaceGrid::with_frequency_spacing(16, 0.25).unwrap();
        let f = SpacetimeField::zeros(t, x, PhaseParams::default());
        assert!(probe_embedding_29(&f, 0.5, 1.5).is_err());
        assert!(probe_embedding_29(&f, 0.6, 2.5).is_err());
        let r = probe_embedding_29(&f, 0.6, 1.5).unwrap();
        assert_eq!((r.x_over_xsb, r.lp_over_x, r.y_over_xsb1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_cell_in_d_reduces_to_xsb() {
        let t = TauLattice::new(64, 200.0).unwrap();
        let x = SpaceGrid::with_frequency_spacing(64, 1.0 / 32.0).unwrap();
        let mut f = SpacetimeField::zeros(t, x, PhaseParams::default());
        let (l, k) = (60, 36);
        assert!(in_region_d(f.tau_value(l), f.xi_value(k)));
        f.set(l, k, Complex64::new(1.0, 1.0));
        let xmod = norm(&f, NormSpec::xmod()).unwrap();
        let xsb = norm(&f, NormSpec::xsb(-0.75, 0.5)).unwrap();
        assert!((xmod - xsb).abs() < 1e-14 * xsb);
    }

    fn trajectory(u0: &SpectralState, t_half: f64, dt: f64) -> Vec<SpectralState> {
        let steps = (t_half / dt).round() as i64;
        (-steps..=steps)
            .map(|i| free_evolution(u0, i as f64 * dt, PhaseParams::default()))
            .collect()
    }

    fn bump(grid: SpaceGrid) -> SpectralState {
        let mut s = SpectralState::zeros(grid);
        for i in 1..grid.n_points() / 4 {
            let k = i as i64;
            let a = Complex64::new((-(k as f64 - 6.0).powi(2) / 8.0).exp(), 0.0);
            s.coeffs_mut()[grid.slot(k).unwrap()] = a;
            s.coeffs_mut()[grid.slot(-k).unwrap()] = a.conj();
        }
        s
    }

    #[test]
    fn zero_trajectory_and_bad_t() {
        let grid = SpaceGrid::new(16, 2.0 * PI * 4.0).unwrap();
        let states = trajectory(&SpectralState::zeros(grid), 0.5, 0.05);
        let r = restriction_norm_upper(&states, 0.5, PhaseParams::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(restriction_norm_upper(&states, 0.0, PhaseParams::default()).is_err());
        assert!(restriction_norm_upper(&states, 1.0, PhaseParams::default()).is_err());
    }

    #[test]
    fn extension_of_free_wave_is_plancherel_consistent() {
        // oracle: ∫∫|F|² = ∫ χ(t)² ‖u(t)‖²_{L²} dt, and ‖u(t)‖ is constant
        let grid = SpaceGrid::new(32, 2.0 * PI * 4.0).unwrap();
        let u0 = bump(grid);
        let (t_half, dt) = (0.5, 0.01);
        let f = windowed_extension(&trajectory(&u0, t_half, dt), t_half, PhaseParams::default()).unwrap();
        let m = f.n_tau();
        let chi2: f64 = (0..m)
            .map(|r| cutoff_psi(((r as f64 - (m / 2) as f64) * dt).abs() / t_half).powi(2))
            .sum::<f64>()
            * dt;
        let expect = chi2 * u0.l2_norm().powi(2);
        assert!((f.l2_norm_sqr() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn free_evolution_bound_and_continuity_in_t() {
        let grid = SpaceGrid::new(32, 2.0 * PI * 4.0).unwrap();
        let u0 = bump(grid);
        let h = u0.hs_norm(-0.75);
        let dt = 0.005;
        let a = restriction_norm_upper(&trajectory(&u0, 0.25, dt), 0.25, PhaseParams::default()).unwrap();
        let b = restriction_norm_upper(&trajectory(&u0, 0.5, dt), 0.5, PhaseParams::default()).unwrap();
        assert!(a.tau_extent_ok && b.tau_extent_ok);
        assert!(a.value.is_finite() && a.value > 0.0);
        assert!(a.value < 10.0 * h, "{} vs {}", a.value, h);
        let r = b.value / a.value;
        assert!((0.25..=4.0).contains(&r), "{r}");
    }
}
