//! Numerical laboratory for the Cauchy problem of the negative-dispersion
//! Ostrovsky equation `u_t + u_xxx + ½(u²)_x − γ∂_x^{-1}u = 0` at the
//! critical regularity `H^{-3/4}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: periodic grids, the phase `p(ξ) = ξ³ − γ/ξ`, multipliers
//!   and the free group;
//! * [`bourgain`]: spacetime fields, dyadic `A_j ∩ B_k` decomposition and the
//!   `X^{s,b}`, `X^{s,b,1}`, modified `X` and `Y` norms;
//! * [`resonance`]: exact algebraic identities, the resonance sandwich and the
//!   `γ_n` recursion;
//! * [`bilinear`]: convolution probes, dyadic bilinear case analysis and the
//!   exact-geometry counterexamples;
//! * [`solver`]: Duhamel/Picard and integrating-factor RK4 solvers with the
//!   scaling, weak-rotation and Lipschitz experiments;
//! * [`runner`]: the reproducible experiment runner behind the CLI.

pub mod bilinear;
pub mod bourgain;
pub mod error;
pub mod numerics;
pub mod resonance;
pub mod rng;
pub mod runner;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};
