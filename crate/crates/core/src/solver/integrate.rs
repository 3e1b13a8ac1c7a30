use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::config::{Dealias, Scheme, SolverConfig};
use super::nonlinear::NonlinearOp;
use super::picard::solve_picard;
use crate::error::{LabError, Result};
use crate::spectral::{inverse_transform, PhaseParams, SpaceGrid, SpectralState};

/// `L²` growth factor treated as blow-up.
pub const BLOWUP_GROWTH: f64 = 10.0;

/// `e^{-i t p(ξ)}` per FFT slot, `1` at `ξ = 0`.
pub(crate) fn phase_factors(grid: &SpaceGrid, t: f64, params: PhaseParams) -> Vec<Complex64> {
    grid.frequencies()
        .into_iter()
        .map(|xi| {
            if xi == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -t * params.eval_unchecked(xi))
            }
        })
        .collect()
}

fn mul(factors: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    factors.iter().zip(v).map(|(e, c)| e * c).collect()
}

/// Lawson integrating-factor RK4 for `u_t = -i p(D) u + ½ ∂_x(u²)`.
///
/// The linear part is integrated exactly; the classical four stages act on
/// the nonlinearity in the interaction picture.
pub struct IfRk4 {
    grid: SpaceGrid,
    dt: f64,
    op: Option<NonlinearOp>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl IfRk4 {
    pub fn new(grid: SpaceGrid, dt: f64, params: PhaseParams, dealias: Dealias, nonlinear: bool) -> Self {
        IfRk4 {
            grid,
            dt,
            op: nonlinear.then(|| NonlinearOp::new(grid, dealias)),
            half: phase_factors(&grid, 0.5 * dt, params),
            full: phase_factors(&grid, dt, params),
        }
    }

    pub fn from_config(cfg: &SolverConfig) -> Self {
        Self::new(cfg.grid, cfg.dt, cfg.params, cfg.dealias, cfg.nonlinear)
    }

    fn eval(&self, op: &NonlinearOp, v: Vec<Complex64>) -> Result<Vec<Complex64>> {
        Ok(op.apply(&SpectralState::from_coeffs(self.grid, v, 0.0)?)?.into_coeffs())
    }

    pub fn step(&self, u: &SpectralState) -> Result<SpectralState> {
        let h = self.dt;
        let t = u.time() + h;
        let c = u.coeffs();
        let Some(op) = &self.op else {
            return SpectralState::from_coeffs(self.grid, mul(&self.full, c), t);
        };
        let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(p, q)| p + q * a).collect()
        };
        let k1 = self.eval(op, c.to_vec())?;
        let eu_half = mul(&self.half, c);
        let k2 = self.eval(op, mul(&self.half, &axpy(c, 0.5 * h, &k1)))?;
        let k3 = self.eval(op, axpy(&eu_half, 0.5 * h, &k2))?;
        let k4 = self.eval(op, axpy(&mul(&self.full, c), h, &mul(&self.half, &k3)))?;
        let out = (0..c.len())
            .map(|i| {
                let (e, eh) = (self.full[i], self.half[i]);
                e * c[i] + (e * k1[i] + eh * (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)
            })
            .collect();
        SpectralState::from_coeffs(self.grid, out, t)
    }
}

/// One IF-RK4 step of size `dt` with the full nonlinearity.
pub fn step_if_rk4(state: &SpectralState, dt: f64, params: PhaseParams, dealias: Dealias) -> Result<SpectralState> {
    IfRk4::new(*state.grid(), dt, params, dealias, true).step(state)
}

/// Time-ordered states at multiples of `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SpectralState>,
    pub config: SolverConfig,
    /// Set when the run was truncated by blow-up detection.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub stored_states: usize,
    pub final_time: f64,
    pub l2_initial: f64,
    pub l2_drift: f64,
    pub mean_zero: bool,
}

impl Trajectory {
    pub fn initial(&self) -> &SpectralState {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time()).collect()
    }

    /// All `T/dt + 1` states are present.
    pub fn is_complete(&self) -> bool {
        self.states.len() == self.config.steps() + 1
    }

    pub fn check_blowup(&self) -> Result<()> {
        match &self.diagnostic {
            Some(msg) => Err(LabError::Divergence(msg.clone())),
            None => Ok(()),
        }
    }

    /// `sup_t ‖u(t)‖_{H^s}`.
    pub fn sup_norm(&self, s: f64) -> f64 {
        self.states.iter().map(|u| u.hs_norm(s)).fold(0.0, f64::max)
    }

    /// `sup_t ‖u(t) - v(t)‖_{H^s}` over matching time stamps.
    pub fn sup_distance(&self, other: &Trajectory, s: f64) -> Result<f64> {
        if self.states.len() != other.states.len() {
            return Err(LabError::GridMismatch(format!(
                "{} vs {} time stamps",
                self.states.len(),
                other.states.len()
            )));
        }
        self.states
            .iter()
            .zip(&other.states)
            .try_fold(0.0f64, |m, (a, b)| Ok(m.max(a.hs_distance(b, s)?)))
    }

    /// `max_t |‖u(t)‖_{L²}/‖u(0)‖_{L²} - 1|`.
    pub fn l2_drift(&self) -> f64 {
        let l0 = self.initial().l2_norm();
        if l0 == 0.0 {
            return 0.0;
        }
        self.states
            .iter()
            .map(|u| (u.l2_norm() / l0 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            stored_states: self.states.len(),
            final_time: self.last().time(),
            l2_initial: self.initial().l2_norm(),
            l2_drift: self.l2_drift(),
            mean_zero: self.states.iter().all(|u| u.is_mean_zero()),
        }
    }

    /// Physical-space samples as `t,x,u` rows, every `stride`-th state.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "u"])?;
        let xs = self.config.grid.positions();
        for state in self.states.iter().step_by(stride.max(1)) {
            let t = state.time().to_string();
            for (x, u) in xs.iter().zip(inverse_transform(state)) {
                w.write_record([t.as_str(), &x.to_string(), &u.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_initial(u0: &SpectralState, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    u0.check_same_grid(&SpectralState::zeros(cfg.grid))?;
    if !u0.is_mean_zero() {
        return Err(LabError::Invariant("initial data must be mean-zero".into()));
    }
    Ok(())
}

fn integrate_if_rk4(u0: &SpectralState, cfg: &SolverConfig) -> Result<Trajectory> {
    let stepper = IfRk4::from_config(cfg);
    let l0 = u0.l2_norm();
    let mut states = Vec::with_capacity(cfg.steps() + 1);
    states.push(u0.clone().with_time(0.0));
    let mut diagnostic = None;
    for i in 1..=cfg.steps() {
        let next = stepper.step(&states[i - 1])?.with_time(cfg.time(i));
        if !next.is_finite() {
            diagnostic = Some(format!("non-finite coefficient at t = {}", cfg.time(i)));
            break;
        }
        let l2 = next.l2_norm();
        if l0 > 0.0 && l2 > BLOWUP_GROWTH * l0 {
            diagnostic = Some(format!("L2 norm grew from {l0:e} to {l2:e} by t = {}", cfg.time(i)));
            break;
        }
        states.push(next);
    }
    Ok(Trajectory {
        states,
        config: *cfg,
        diagnostic,
    })
}

/// Solves from mean-zero `u0` with the configured scheme. Blow-up truncates
/// the trajectory and sets [`Trajectory::diagnostic`].
pub fn solve(u0: &SpectralState, cfg: &SolverConfig) -> Result<Trajectory> {
    check_initial(u0, cfg)?;
    match cfg.scheme {
        Scheme::IfRk4 => integrate_if_rk4(u0, cfg),
        Scheme::Picard => Ok(solve_picard(u0, cfg)?.0),
    }
}

/// Free evolution sampled on the solver time stamps.
pub fn free_trajectory(u0: &SpectralState, cfg: &SolverConfig) -> Result<Trajectory> {
    check_initial(u0, cfg)?;
    integrate_if_rk4(u0, &cfg.linear())
        .map(|t| Trajectory { config: *cfg, ..t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::data::{builtin_data, BuiltinData};
    use crate::spectral::free_evolution;

    fn smooth(n: usize, amp: f64) -> (SpectralState, SpaceGrid) {
        let g = SpaceGrid::with_default_length(n).unwrap();
        (builtin_data(BuiltinData::Gaussian, g, amp, 0).unwrap(), g)
    }

    #[test]
    fn linear_run_is_exact_free_evolution() {
        let (u0, g) = smooth(128, 0.5);
        let cfg = SolverConfig::new(g, 0.01, 1.0, PhaseParams::kdv()).unwrap().linear();
        let traj = solve(&u0, &cfg).unwrap();
        let exact = free_evolution(&u0, 1.0, PhaseParams::kdv());
        assert!(traj.last().hs_distance(&exact, 0.0).unwrap() < 1e-12 * u0.l2_norm());
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = SpaceGrid::with_default_length(64).unwrap();
        let cfg = SolverConfig::new(g, 0.1, 1.0, PhaseParams::default()).unwrap();
        let traj = solve(&SpectralState::zeros(g), &cfg).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!(traj.states.iter().all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn fourth_order_self_convergence() {
        let (u0, g) = smooth(128, 1.0);
        let p = PhaseParams::default();
        let run = |dt: f64| solve(&u0, &SolverConfig::new(g, dt, 0.5, p).unwrap()).unwrap().last().clone();
        let reference = run(0.5 / 512.0);
        let e1 = run(0.5 / 32.0).hs_distance(&reference, 0.0).unwrap();
        let e2 = run(0.5 / 64.0).hs_distance(&reference, 0.0).unwrap();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn conserves_l2_and_mean() {
        let (u0, g) = smooth(128, 1.0);
        let cfg = SolverConfig::new(g, 1e-3, 1.0, PhaseParams::default()).unwrap();
        let traj = solve(&u0, &cfg).unwrap();
        assert!(traj.is_complete() && traj.diagnostic.is_none());
        assert!(traj.l2_drift() < 1e-6, "drift {}", traj.l2_drift());
        assert!(traj.states.iter().all(|s| s.is_mean_zero()));
    }

    #[test]
    fn blowup_truncates() {
        let (u0, g) = smooth(64, 1e6);
        let cfg = SolverConfig::new(g, 0.1, 1.0, PhaseParams::default()).unwrap();
        let traj = solve(&u0, &cfg).unwrap();
        assert!(!traj.is_complete());
        assert!(traj.check_blowup().is_err());
    }

    #[test]
    fn rejects_mean() {
        let g = SpaceGrid::with_default_length(64).unwrap();
        let u = SpectralState::single_mode(g, 0, Complex64::new(1.0, 0.0)).unwrap();
        let cfg = SolverConfig::new(g, 0.1, 1.0, PhaseParams::default()).unwrap();
        assert!(matches!(solve(&u, &cfg), Err(LabError::Invariant(_))));
    }
}
