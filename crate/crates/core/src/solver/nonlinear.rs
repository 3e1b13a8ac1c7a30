use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::config::Dealias;
use crate::error::{LabError, Result};
use crate::spectral::{SpaceGrid, SpectralState};

/// Planned evaluator of `½ ∂_x(u²)`.
pub struct NonlinearOp {
    grid: SpaceGrid,
    dealias: Dealias,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl NonlinearOp {
    pub fn new(grid: SpaceGrid, dealias: Dealias) -> Self {
        let n = grid.n_points();
        let size = match dealias {
            Dealias::TwoThirds => 3 * n / 2,
            Dealias::None => n,
        };
        let mut planner = FftPlanner::new();
        NonlinearOp {
            grid,
            dealias,
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    fn buffer_slot(&self, k: i64) -> usize {
        if k >= 0 {
            k as usize
        } else {
            (self.size as i64 + k) as usize
        }
    }

    pub fn apply(&self, state: &SpectralState) -> Result<SpectralState> {
        let grid = self.grid;
        if *state.grid() != grid {
            return Err(LabError::GridMismatch(format!("{} vs {grid}", state.grid())));
        }
        let n = grid.n_points();
        let nyq = grid.nyquist_slot();
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = vec![zero; self.size];
        for (idx, c) in state.coeffs().iter().enumerate() {
            // the unpaired Nyquist mode has no alias-free home on the padded grid
            if idx == nyq && self.dealias == Dealias::TwoThirds {
                continue;
            }
            buf[self.buffer_slot(grid.wavenumber(idx))] = *c;
        }
        self.inv.process(&mut buf);
        for v in &mut buf {
            *v = *v * *v;
        }
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        let out = (0..n)
            .map(|idx| {
                if idx == nyq {
                    return zero;
                }
                let xi = grid.frequency(idx);
                buf[self.buffer_slot(grid.wavenumber(idx))] * Complex64::new(0.0, 0.5 * xi * scale)
            })
            .collect();
        SpectralState::from_coeffs(grid, out, state.time())
    }
}

/// `½ ∂_x(u²)` evaluated pseudospectrally; the output is mean-zero and has a
/// zero Nyquist mode.
pub fn nonlinearity(state: &SpectralState, dealias: Dealias) -> Result<SpectralState> {
    NonlinearOp::new(*state.grid(), dealias).apply(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_state(grid: SpaceGrid, seed: u64) -> SpectralState {
        let mut r = rng::stream(seed, 0);
        let coeffs = (0..grid.n_points())
            .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect();
        SpectralState::from_coeffs(grid, coeffs, 0.0).unwrap().with_mean_removed()
    }

    // c_a c_b summed over a + b = k, wrapped modulo n or not at all
    fn direct(state: &SpectralState, wrap: bool) -> Vec<Complex64> {
        let g = *state.grid();
        let n = g.n_points() as i64;
        let c = state.coeffs();
        let mut w = vec![Complex64::new(0.0, 0.0); c.len()];
        for a in 0..c.len() {
            for b in 0..c.len() {
                let (ka, kb) = (g.wavenumber(a), g.wavenumber(b));
                if !wrap && (a == g.nyquist_slot() || b == g.nyquist_slot()) {
                    continue;
                }
                let k = ka + kb;
                let k = if wrap { (k + n / 2).rem_euclid(n) - n / 2 } else { k };
                if let Some(s) = g.slot(k) {
                    w[s] += c[a] * c[b];
                }
            }
        }
        (0..c.len())
            .map(|i| {
                if i == g.nyquist_slot() {
                    Complex64::new(0.0, 0.0)
                } else {
                    w[i] * Complex64::new(0.0, 0.5 * g.frequency(i))
                }
            })
            .collect()
    }

    #[test]
    fn zero_state() {
        let g = SpaceGrid::with_default_length(32).unwrap();
        let out = nonlinearity(&SpectralState::zeros(g), Dealias::TwoThirds).unwrap();
        assert!(out.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_mode_doubles() {
        let g = SpaceGrid::with_default_length(32).unwrap();
        let u = SpectralState::single_mode(g, 3, Complex64::new(0.7, 0.2)).unwrap();
        for d in [Dealias::TwoThirds, Dealias::None] {
            let out = nonlinearity(&u, d).unwrap();
            for (i, c) in out.coeffs().iter().enumerate() {
                let k = g.wavenumber(i);
                if k.abs() != 6 {
                    assert!(c.norm() < 1e-14, "k = {k}: {c}");
                }
            }
            let a = Complex64::new(0.7, 0.2);
            let want = a * a * Complex64::new(0.0, 0.5 * 6.0 * g.dxi());
            assert!((out.coeffs()[g.slot(6).unwrap()] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_convolution() {
        let g = SpaceGrid::with_default_length(16).unwrap();
        for seed in 0..4 {
            let u = random_state(g, seed);
            for (d, wrap) in [(Dealias::None, true), (Dealias::TwoThirds, false)] {
                let fast = nonlinearity(&u, d).unwrap();
                let slow = direct(&u, wrap);
                for (a, b) in fast.coeffs().iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-10, "{d:?}: {a} vs {b}");
                }
                assert!(fast.is_mean_zero());
            }
        }
    }
}
