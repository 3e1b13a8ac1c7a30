use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convolution::convolve;
use super::report::{ProbeReport, ScaleRow};
use super::trial::{trial_pair_with, DyadicSupportSpec, ProbeLattice, Region, SignPattern};
use crate::bourgain::{dyadic_index_mod, norm, NormSpec, SpacetimeField};
use crate::error::{LabError, Result};
use crate::rng;
use crate::spectral::PhaseParams;

/// The convolution estimates that can be probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConvLemma {
    L21a,
    L21b,
    L22a,
    L22b,
    L23,
    L24a,
    L24b,
    L25a,
    L25b,
    L26,
}

impl ConvLemma {
    pub const ALL: [ConvLemma; 10] = [
        ConvLemma::L21a,
        ConvLemma::L21b,
        ConvLemma::L22a,
        ConvLemma::L22b,
        ConvLemma::L23,
        ConvLemma::L24a,
        ConvLemma::L24b,
        ConvLemma::L25a,
        ConvLemma::L25b,
        ConvLemma::L26,
    ];

    /// Estimates on `‖f*g‖_{L²(Ω ∩ B_k)}` rather than on the whole plane.
    pub fn uses_omega(self) -> bool {
        matches!(
            self,
            ConvLemma::L24a | ConvLemma::L24b | ConvLemma::L25a | ConvLemma::L25b | ConvLemma::L26
        )
    }

    /// Whether the scale index refines a fixed low-frequency geometry instead
    /// of moving to a higher shell.
    pub fn is_refinement(self) -> bool {
        matches!(
            self,
            ConvLemma::L22a | ConvLemma::L22b | ConvLemma::L25a | ConvLemma::L25b
        )
    }

    /// The `(a)` forms carry no separation constant on the right.
    fn has_k_factor(self) -> bool {
        !matches!(self, ConvLemma::L21a | ConvLemma::L22a | ConvLemma::L24a | ConvLemma::L25a)
    }

    fn min_separation(self) -> f64 {
        if self.is_refinement() {
            2.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for ConvLemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ConvLemma {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ConvLemma::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| LabError::param("lemma", format!("unknown lemma `{s}`")))
    }
}

/// One scale of a convolution probe: lattice, input supports, the output set
/// `Ω` (for the `Ω`-restricted estimates) and the separation constant used on
/// the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvSetup {
    pub scale: f64,
    pub lattice: ProbeLattice,
    pub f: DyadicSupportSpec,
    pub g: DyadicSupportSpec,
    pub omega: Option<Region>,
    /// Separation constant; `None` uses the value measured on each sample.
    pub k: Option<f64>,
}

fn window(lo: f64, hi: f64) -> Region {
    Region::Window { lo, hi }
}

fn spec(j: u32, k_max: u32, sign: SignPattern, lo: f64, hi: f64) -> DyadicSupportSpec {
    DyadicSupportSpec::new(j, k_max, sign).with_region(window(lo, hi))
}

/// Built-in geometry of `lemma` at scale index `s` on an `m × n` lattice
/// (`n` is raised as needed for the refinement geometries).
///
/// Shell geometries use `N = 2^s`; the low-frequency small-factor
/// geometries keep `ξ1 ≈ ±2.5`, `ξ2 ≈ 0.1` and halve `Δξ` per step.
pub fn conv_lemma_setup(lemma: ConvLemma, s: u32, m: usize, n: usize) -> Result<ConvSetup> {
    let params = PhaseParams::default();
    if lemma.is_refinement() {
        let dxi = 0.02 / 2f64.powi(s as i32);
        let cols = n.max(((6.0 / dxi).ceil() as usize).next_power_of_two());
        let lattice = ProbeLattice::new(m, cols, 24.0, 0.5 * cols as f64 * dxi, params)?;
        let (f, g, omega) = if matches!(lemma, ConvLemma::L22a | ConvLemma::L22b) {
            (
                spec(1, 1, SignPattern::Same, 2.4, 2.6),
                spec(0, 1, SignPattern::Same, 0.08, 0.12),
                None,
            )
        } else {
            (
                spec(1, 1, SignPattern::Opposite, -2.6, -2.4),
                spec(1, 1, SignPattern::Same, 2.48, 2.72),
                Some(window(0.08, 0.12)),
            )
        };
        return Ok(ConvSetup {
            scale: 2f64.powi(s as i32),
            lattice,
            f,
            g,
            omega,
            k: Some(2.0),
        });
    }
    if s < 2 {
        return Err(LabError::Infeasible(format!("{lemma} needs scale index >= 2")));
    }
    let big = 2f64.powi(s as i32);
    let cube = big.powi(3);
    let (f, g, omega, tau_ext, xi_ext) = match lemma {
        ConvLemma::L21a | ConvLemma::L21b => (
            spec(s, 3 * s - 4, SignPattern::Same, big, 1.4 * big),
            spec(s, 3 * s - 4, SignPattern::Opposite, -1.4 * big, -big),
            None,
            3.0 * cube,
            1.5 * big,
        ),
        ConvLemma::L23 => (
            spec(s, 3 * s - 1, SignPattern::Same, 1.1 * big, 1.5 * big),
            spec(s - 1, 3 * s - 1, SignPattern::Same, 0.55 * big, 0.8 * big),
            None,
            13.0 * cube,
            2.4 * big,
        ),
        ConvLemma::L24a | ConvLemma::L24b => (
            spec(s, 3 * s - 2, SignPattern::Same, big, 1.2 * big),
            spec(s - 1, 3 * s - 2, SignPattern::Same, 0.55 * big, 0.9 * big),
            Some(window(1.6 * big, 1.9 * big)),
            10.0 * cube,
            2.2 * big,
        ),
        ConvLemma::L26 => (
            spec(s, 3 * s - 2, SignPattern::Same, big, 1.3 * big),
            spec(s, 3 * s - 2, SignPattern::Opposite, -1.9 * big, -1.4 * big),
            Some(window(-0.6 * big, -0.4 * big)),
            7.5 * cube,
            2.0 * big,
        ),
        _ => unreachable!("refinement lemmas handled above"),
    };
    Ok(ConvSetup {
        scale: big,
        lattice: ProbeLattice::new(m, n, tau_ext, xi_ext, params)?,
        f,
        g,
        omega,
        k: None,
    })
}

fn factor(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::INFINITY
    }
}

fn omega_columns(field: &SpacetimeField, omega: &Region) -> Vec<f64> {
    (0..field.n_xi())
        .map(|k| field.xi_value(k))
        .filter(|&xi| xi != 0.0 && (0..field.n_tau()).any(|l| omega.contains(field.tau_value(l), xi)))
        .collect()
}

/// The separation measured on a sample: `inf |ξ1 − ξ2|` over the input
/// supports, or `inf |ξ1 + ξ|` over `supp f × Ω` for the `Ω` estimates.
pub fn measured_separation(lemma: ConvLemma, setup: &ConvSetup, f: &SpacetimeField, g: &SpacetimeField) -> f64 {
    let a = f.xi_support();
    let b = match (lemma.uses_omega(), &setup.omega) {
        (true, Some(om)) => omega_columns(f, om).into_iter().map(|x| -x).collect(),
        _ => g.xi_support(),
    };
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Checks the sign / factor / separation hypotheses of `lemma` on the
/// actual supports; returns the separation constant to use.
pub fn check_hypotheses(lemma: ConvLemma, setup: &ConvSetup, f: &SpacetimeField, g: &SpacetimeField) -> Result<f64> {
    let fail = |what: String| Err(LabError::Hypothesis(format!("{lemma}: {what}")));
    let sf = f.xi_support();
    match lemma {
        ConvLemma::L21a | ConvLemma::L21b | ConvLemma::L22a | ConvLemma::L22b => {
            let small = matches!(lemma, ConvLemma::L22a | ConvLemma::L22b);
            for &x1 in &sf {
                for &x2 in &g.xi_support() {
                    let x = x1 + x2;
                    let fac = factor(1.0 - 4.0 / (3.0 * x * x * x1 * x2)).abs();
                    let ok = if small {
                        x1 * x2 >= 0.0 && fac <= 0.5
                    } else {
                        x1 * x2 < 0.0 || fac > 0.5
                    };
                    if !ok {
                        let cond = if small {
                            "xi1*xi2 >= 0 and |1 - 4/(3 xi^2 xi1 xi2)| <= 1/2"
                        } else {
                            "xi1*xi2 < 0 or |1 - 4/(3 xi^2 xi1 xi2)| > 1/2"
                        };
                        return fail(format!("{cond} fails at xi1 = {x1}, xi2 = {x2}"));
                    }
                }
            }
        }
        ConvLemma::L24a | ConvLemma::L24b | ConvLemma::L25a | ConvLemma::L25b | ConvLemma::L26 => {
            let Some(om) = &setup.omega else {
                return fail("needs an output set omega".into());
            };
            let small = matches!(lemma, ConvLemma::L25a | ConvLemma::L25b);
            if lemma != ConvLemma::L26 {
                for x in omega_columns(f, om) {
                    for &x1 in &sf {
                        let x2 = x - x1;
                        let fac = factor(1.0 + 4.0 / (3.0 * x * x1 * x2 * x2)).abs();
                        let ok = if small {
                            x * x1 <= 0.0 && fac <= 0.5
                        } else {
                            x * x1 > 0.0 || fac > 0.5
                        };
                        if !ok {
                            let cond = if small {
                                "xi*xi1 <= 0 and |1 + 4/(3 xi xi1 xi2^2)| <= 1/2"
                            } else {
                                "xi*xi1 > 0 or |1 + 4/(3 xi xi1 xi2^2)| > 1/2"
                            };
                            return fail(format!("{cond} fails at xi = {x}, xi1 = {x1}"));
                        }
                    }
                }
            }
        }
        ConvLemma::L23 => {}
    }
    let measured = measured_separation(lemma, setup, f, g);
    let k = setup.k.unwrap_or(measured);
    let floor = lemma.min_separation();
    if !(k > 0.0 && k >= floor) {
        return fail(format!("separation constant {k} must be positive and >= {floor}"));
    }
    if k > measured * (1.0 + 1e-12) {
        return fail(format!("separation constant {k} exceeds the support separation {measured}"));
    }
    Ok(k)
}

fn weighted_l2(field: &SpacetimeField, power: f64) -> f64 {
    field
        .multiplied(|_, xi| Complex64::new(xi.abs().powf(power), 0.0))
        .l2_norm()
}

/// `LHS / RHS` of `lemma` for one pair of inputs; `0` when the left side
/// vanishes.
///
/// For the `Ω` estimates the ratio is the maximum over the populated output
/// modulation shells `B_k`.
pub fn conv_lemma_ratio(lemma: ConvLemma, setup: &ConvSetup, f: &SpacetimeField, g: &SpacetimeField) -> Result<f64> {
    let k_sep = check_hypotheses(lemma, setup, f, g)?;
    let h = convolve(f, g)?;
    let kf = if lemma.has_k_factor() { k_sep.powf(-0.5) } else { 1.0 };
    let xf = norm(f, NormSpec::xsb1(0.0, 0.5))?;
    if !lemma.uses_omega() {
        let power = if lemma == ConvLemma::L21a || lemma == ConvLemma::L22a { 0.25 } else { 0.5 };
        let lhs = weighted_l2(&h, power);
        if lhs == 0.0 {
            return Ok(0.0);
        }
        let xg = norm(g, NormSpec::xsb1(0.0, 0.5))?;
        return Ok(lhs / (kf * xf * xg));
    }
    let om = setup.omega.expect("checked above");
    let params = f.params();
    let (gpow, kpow) = if lemma.has_k_factor() { (-0.5, 0.5) } else { (-0.25, 0.25) };
    let gn = weighted_l2(g, gpow);
    let mut shells: std::collections::BTreeMap<u32, Vec<f64>> = Default::default();
    for (_, _, tau, xi, v) in h.cells() {
        if xi != 0.0 && om.contains(tau, xi) && v.norm() > 0.0 {
            let k = dyadic_index_mod(tau, xi, params)?;
            shells.entry(k).or_default().push(v.norm_sqr());
        }
    }
    let area = h.cell_area();
    let mut best: f64 = 0.0;
    for (k, masses) in shells {
        let lhs = (crate::numerics::pairwise_sum(&masses) * area).sqrt();
        let rhs = 2f64.powf(kpow * k as f64) * kf * xf * gn;
        best = best.max(lhs / rhs);
    }
    Ok(best)
}

/// Per-scale max/median ratio of `lemma` over `samples` random input pairs.
pub fn probe_convolution_lemma(
    lemma: ConvLemma,
    setups: &[ConvSetup],
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if samples == 0 || setups.is_empty() {
        return Err(LabError::param("samples", "need at least one scale and one sample"));
    }
    let mut rows = Vec::with_capacity(setups.len());
    for (si, setup) in setups.iter().enumerate() {
        let ratios = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut r = rng::substream(seed, si as u32, s as u32);
                let (f, g) = trial_pair_with(&setup.f, &setup.g, &setup.lattice, &mut r)?;
                conv_lemma_ratio(lemma, setup, &f, &g)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(ScaleRow::from_ratios(setup.scale, &ratios));
    }
    let grid: Vec<(usize, usize)> = setups
        .iter()
        .map(|s| (s.lattice.tau.len(), s.lattice.xi.n_points()))
        .collect();
    Ok(ProbeReport::new(lemma.to_string(), seed, rows).with_meta("grid", grid))
}

/// Runs the built-in geometry of `lemma` at the given scale indices.
pub fn probe_convolution_lemma_default(
    lemma: ConvLemma,
    scales: &[u32],
    samples: usize,
    seed: u64,
    grid: usize,
) -> Result<ProbeReport> {
    let setups = scales
        .iter()
        .map(|&s| conv_lemma_setup(lemma, s, grid, grid))
        .collect::<Result<Vec<_>>>()?;
    probe_convolution_lemma(lemma, &setups, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(setup: &ConvSetup, seed: u64) -> (SpacetimeField, SpacetimeField) {
        let mut r = rng::stream(seed, 0);
        trial_pair_with(&setup.f, &setup.g, &setup.lattice, &mut r).unwrap()
    }

    #[test]
    fn every_builtin_geometry_satisfies_its_hypotheses() {
        for lemma in ConvLemma::ALL {
            let setup = conv_lemma_setup(lemma, if lemma.is_refinement() { 0 } else { 4 }, 64, 64).unwrap();
            let (f, g) = sample(&setup, 1);
            let r = conv_lemma_ratio(lemma, &setup, &f, &g).unwrap();
            assert!(r.is_finite() && r > 0.0, "{lemma}: {r}");
        }
    }

    #[test]
    fn zero_partner_gives_zero() {
        let setup = conv_lemma_setup(ConvLemma::L21a, 4, 64, 64).unwrap();
        let (f, g) = sample(&setup, 2);
        let zero = g.scaled(Complex64::new(0.0, 0.0));
        assert_eq!(conv_lemma_ratio(ConvLemma::L23, &ConvSetup { k: Some(1.0), ..setup }, &f, &zero).unwrap(), 0.0);
        let setup = conv_lemma_setup(ConvLemma::L26, 4, 64, 64).unwrap();
        let (f, _) = sample(&setup, 2);
        let zero = f.scaled(Complex64::new(0.0, 0.0));
        assert_eq!(conv_lemma_ratio(ConvLemma::L26, &ConvSetup { k: Some(1.0), ..setup }, &f, &zero).unwrap(), 0.0);
    }

    #[test]
    fn doubling_separation_constant() {
        let base = conv_lemma_setup(ConvLemma::L23, 4, 64, 64).unwrap();
        let (f, g) = sample(&base, 3);
        let sep = measured_separation(ConvLemma::L23, &base, &f, &g);
        let r1 = conv_lemma_ratio(ConvLemma::L23, &ConvSetup { k: Some(sep / 2.0), ..base }, &f, &g).unwrap();
        let r2 = conv_lemma_ratio(ConvLemma::L23, &ConvSetup { k: Some(sep), ..base }, &f, &g).unwrap();
        let q = r2 / r1;
        assert!((q / 2f64.sqrt() - 1.0).abs() < 0.2, "{q}");
        let too_far = ConvSetup { k: Some(2.0 * sep), ..base };
        assert!(matches!(conv_lemma_ratio(ConvLemma::L23, &too_far, &f, &g), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn hypothesis_violations_are_named() {
        // small-factor pairs are outside the sign/large-factor split
        let small = conv_lemma_setup(ConvLemma::L22a, 0, 64, 64).unwrap();
        let (f, g) = sample(&small, 5);
        let err = conv_lemma_ratio(ConvLemma::L21a, &small, &f, &g).unwrap_err();
        assert!(err.to_string().contains("L21a") && err.to_string().contains("xi1*xi2 < 0"), "{err}");
        let wrong_k = ConvSetup { k: Some(1.0), ..small };
        let err = conv_lemma_ratio(ConvLemma::L22b, &wrong_k, &f, &g).unwrap_err();
        assert!(err.to_string().contains(">= 2"), "{err}");
    }

    #[test]
    fn probe_report_is_deterministic() {
        let a = probe_convolution_lemma_default(ConvLemma::L21a, &[3, 4, 5], 4, 9, 64).unwrap();
        let b = probe_convolution_lemma_default(ConvLemma::L21a, &[3, 4, 5], 4, 9, 64).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 3);
        assert!(a.fit.is_some() && a.all_finite());
        assert_eq!("l24b".parse::<ConvLemma>().unwrap(), ConvLemma::L24b);
    }
}
