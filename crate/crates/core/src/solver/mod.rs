//! Solvers for the Ostrovsky equation in Duhamel form
//! `u(t) = e^{-itp(D)} u0 + ½∫₀ᵗ e^{-i(t-s)p(D)} ∂_x(u²) ds` on the periodic
//! grid, and the experiments built on them.

pub mod config;
pub mod data;
pub mod experiments;
pub mod integrate;
pub mod nonlinear;
pub mod picard;

pub use config::{Dealias, Scheme, SolverConfig};
pub use data::{builtin_data, load_csv, resample, BuiltinData};
pub use experiments::{
    kdv_limit_experiment, kdv_limit_grid_check, lipschitz_probe, lipschitz_sweep, rescale_initial, scaling_check,
    KdvLimitReport, KdvLimitRow, LipschitzReport, LipschitzRow, ScalingRow, CRITICAL_INDEX,
};
pub use integrate::{free_trajectory, solve, step_if_rk4, IfRk4, Trajectory, TrajectorySummary};
pub use nonlinear::{nonlinearity, NonlinearOp};
pub use picard::{fixed_point_residual, picard_step, solve_picard, PicardDiagnostics};
