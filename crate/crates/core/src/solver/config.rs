use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{PhaseParams, SpaceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    /// Fixed-point iteration of the Duhamel map on stored time stamps.
    Picard,
    /// Lawson integrating-factor Runge–Kutta 4.
    IfRk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Picard => "picard",
            Scheme::IfRk4 => "if_rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "picard" => Ok(Scheme::Picard),
            "if_rk4" | "ifrk4" | "rk4" => Ok(Scheme::IfRk4),
            other => Err(LabError::param("scheme", format!("unknown scheme `{other}` (picard, if_rk4)"))),
        }
    }
}

/// Treatment of the quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dealias {
    /// Alias-free product: zero-pad to `3n/2` points before squaring, which
    /// leaves the retained modes identical to the two-thirds rule.
    TwoThirds,
    /// Plain product on the `n`-point grid.
    None,
}

impl fmt::Display for Dealias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dealias::TwoThirds => "two_thirds",
            Dealias::None => "none",
        })
    }
}

impl FromStr for Dealias {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "two_thirds" | "2/3" => Ok(Dealias::TwoThirds),
            "none" => Ok(Dealias::None),
            other => Err(LabError::param("dealias", format!("unknown dealiasing `{other}` (two_thirds, none)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: SpaceGrid,
    pub dt: f64,
    /// Final time `T`, at most 1.
    pub t_final: f64,
    pub params: PhaseParams,
    pub scheme: Scheme,
    pub dealias: Dealias,
    pub picard_iters: usize,
    /// Switches the quadratic term off (linear runs).
    pub nonlinear: bool,
}

impl SolverConfig {
    /// IF-RK4 with two-thirds dealiasing and 50 Picard iterations.
    pub fn new(grid: SpaceGrid, dt: f64, t_final: f64, params: PhaseParams) -> Result<Self> {
        let cfg = SolverConfig {
            grid,
            dt,
            t_final,
            params,
            scheme: Scheme::IfRk4,
            dealias: Dealias::TwoThirds,
            picard_iters: 50,
            nonlinear: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dealias(mut self, dealias: Dealias) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_picard_iters(mut self, iters: usize) -> Self {
        self.picard_iters = iters;
        self
    }

    pub fn with_params(mut self, params: PhaseParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_grid(mut self, grid: SpaceGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0 && self.t_final <= 1.0) {
            return Err(LabError::param("T", format!("must lie in (0, 1], got {}", self.t_final)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_final) {
            return Err(LabError::param("dt", format!("must lie in (0, T], got {}", self.dt)));
        }
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(LabError::param(
                "dt",
                format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt),
            ));
        }
        if self.picard_iters == 0 {
            return Err(LabError::param("picard_iters", "must be positive"));
        }
        Ok(())
    }

    /// Number of time steps `T/dt`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let grid = SpaceGrid::with_default_length(64).unwrap();
        let p = PhaseParams::default();
        let cfg = SolverConfig::new(grid, 1e-3, 1.0, p).unwrap();
        assert_eq!(cfg.steps(), 1000);
        assert!(SolverConfig::new(grid, 1e-3, 1.5, p).is_err());
        assert!(SolverConfig::new(grid, 0.3, 1.0, p).is_err());
        assert!(SolverConfig::new(grid, 2.0, 1.0, p).is_err());
        assert!(cfg.with_picard_iters(0).validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for s in [Scheme::Picard, Scheme::IfRk4] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        for d in [Dealias::TwoThirds, Dealias::None] {
            assert_eq!(d.to_string().parse::<Dealias>().unwrap(), d);
        }
        assert!("euler".parse::<Scheme>().is_err());
    }
}
