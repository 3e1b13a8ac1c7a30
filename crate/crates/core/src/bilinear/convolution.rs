use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::bourgain::SpacetimeField;
use crate::error::Result;

fn fft_rows(buf: &mut [Complex64], cols: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_mut(cols) {
        fft.process(row);
    }
}

fn fft_cols(buf: &mut [Complex64], rows: usize, cols: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut col = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = buf[r * cols + c];
        }
        fft.process(&mut col);
        for r in 0..rows {
            buf[r * cols + c] = col[r];
        }
    }
}

/// `(F * G)(τ, ξ) = ∫∫ F(τ1, ξ1) G(τ − τ1, ξ − ξ1) dτ1 dξ1` on the common
/// lattice.
///
/// Computed by a zero-padded two-dimensional FFT, so there is no periodic
/// wraparound; values whose `(τ, ξ)` falls outside the lattice are dropped.
pub fn convolve(f: &SpacetimeField, g: &SpacetimeField) -> Result<SpacetimeField> {
    f.check_same_lattice(g)?;
    let (m, n) = (f.n_tau(), f.n_xi());
    let (rows, cols) = (2 * m, 2 * n);
    let mut planner = FftPlanner::new();
    let row_fwd = planner.plan_fft_forward(cols);
    let col_fwd = planner.plan_fft_forward(rows);
    let row_inv = planner.plan_fft_inverse(cols);
    let col_inv = planner.plan_fft_inverse(rows);

    let pad = |src: &SpacetimeField| {
        let mut buf = vec![Complex64::new(0.0, 0.0); rows * cols];
        for l in 0..m {
            buf[l * cols..l * cols + n].copy_from_slice(&src.values()[l * n..(l + 1) * n]);
        }
        buf
    };
    let mut a = pad(f);
    let mut b = pad(g);
    for buf in [&mut a, &mut b] {
        fft_rows(buf, cols, &row_fwd);
        fft_cols(buf, rows, cols, &col_fwd);
    }
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_cols(&mut a, rows, cols, &col_inv);
    fft_rows(&mut a, cols, &row_inv);

    // index sums l1 + l2 map to output l = l1 + l2 − m/2 (same for ξ)
    let scale = f.cell_area() / (rows * cols) as f64;
    let mut out = SpacetimeField::zeros(*f.tau_lattice(), *f.xi_grid(), f.params());
    for l in 0..m {
        for k in 0..n {
            let v = a[(l + m / 2) * cols + k + n / 2] * scale;
            out.set(l, k, v);
        }
    }
    Ok(out)
}

/// Direct `O(M²n²)` summation; the reference for [`convolve`].
pub fn convolve_direct(f: &SpacetimeField, g: &SpacetimeField) -> Result<SpacetimeField> {
    f.check_same_lattice(g)?;
    let (m, n) = (f.n_tau() as i64, f.n_xi() as i64);
    let mut out = SpacetimeField::zeros(*f.tau_lattice(), *f.xi_grid(), f.params());
    for l in 0..m {
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for l1 in 0..m {
                let l2 = l + m / 2 - l1;
                if !(0..m).contains(&l2) {
                    continue;
                }
                for k1 in 0..n {
                    let k2 = k + n / 2 - k1;
                    if !(0..n).contains(&k2) {
                        continue;
                    }
                    acc += f.get(l1 as usize, k1 as usize) * g.get(l2 as usize, k2 as usize);
                }
            }
            out.set(l as usize, k as usize, acc * f.cell_area());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bourgain::TauLattice;
    use crate::spectral::{PhaseParams, SpaceGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, m: usize, n: usize, sparse: bool) -> SpacetimeField {
        let t = TauLattice::new(m, 0.5).unwrap();
        let x = SpaceGrid::with_frequency_spacing(n, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpacetimeField::from_fn(t, x, PhaseParams::default(), |_, _| {
            if sparse && rng.random::<f64>() < 0.8 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }
        })
        .unwrap()
    }

    fn max_diff(a: &SpacetimeField, b: &SpacetimeField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn matches_direct_summation() {
        let f = random(1, 16, 16, false);
        let g = random(2, 16, 16, false);
        let fast = convolve(&f, &g).unwrap();
        let slow = convolve_direct(&f, &g).unwrap();
        let scale = slow.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_diff(&fast, &slow) <= 1e-10 * scale);
    }

    #[test]
    fn commutative_and_delta_identity() {
        let f = random(3, 16, 32, false);
        let g = random(4, 16, 32, false);
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        let scale = fg.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_diff(&fg, &gf) <= 1e-12 * scale);

        let mut delta = SpacetimeField::zeros(*f.tau_lattice(), *f.xi_grid(), f.params());
        delta.set(8, 16, Complex64::new(1.0 / f.cell_area(), 0.0));
        assert_eq!((delta.tau_value(8), delta.xi_value(16)), (0.0, 0.0));
        let same = convolve(&delta, &g).unwrap();
        assert!(max_diff(&same, &g) <= 1e-12);
    }

    #[test]
    fn support_rule() {
        let f = random(5, 16, 16, true);
        let g = random(6, 16, 16, true);
        let h = convolve(&f, &g).unwrap();
        let support = |s: &SpacetimeField| -> Vec<(f64, f64)> {
            s.cells().filter(|c| c.4.norm() > 0.0).map(|c| (c.2, c.3)).collect()
        };
        let (sf, sg) = (support(&f), support(&g));
        let scale = h.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (_, _, tau, xi, v) in h.cells() {
            if v.norm() > 1e-12 * scale {
                let hit = sf.iter().any(|a| {
                    sg.iter().any(|b| (a.0 + b.0 - tau).abs() < 1e-9 && (a.1 + b.1 - xi).abs() < 1e-9)
                });
                assert!(hit, "({tau}, {xi}) outside the Minkowski sum");
            }
        }
    }

    #[test]
    fn rejects_mismatched_lattices() {
        let f = random(7, 16, 16, false);
        let g = random(8, 16, 32, false);
        assert!(convolve(&f, &g).is_err());
    }
}
