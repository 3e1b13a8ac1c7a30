use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convolution::convolve;
use super::report::{ProbeReport, ScaleRow};
use super::trial::{trial_field_with, DyadicSupportSpec, ProbeLattice, Region, SignPattern};
use crate::bourgain::{dyadic_index_xi, norm, NormSpec, SpacetimeField};
use crate::error::{LabError, Result};
use crate::numerics::bracket;
use crate::rng;
use crate::spectral::PhaseParams;

/// Small exponent loss used by the logarithmic-interaction subcases.
pub const EPSILON: f64 = 0.5e-4;

const HIGH: u32 = 30;

/// Frequency-interaction regimes of the dyadic bilinear estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma31Case {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    Unclassified,
}

impl fmt::Display for Lemma31Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Lemma31Case::I => "i",
            Lemma31Case::II => "ii",
            Lemma31Case::III => "iii",
            Lemma31Case::IV => "iv",
            Lemma31Case::V => "v",
            Lemma31Case::VI => "vi",
            Lemma31Case::VII => "vii",
            Lemma31Case::VIII => "viii",
            Lemma31Case::Unclassified => "unclassified",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Lemma31Case {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Lemma31Case::I,
            "ii" | "2" => Lemma31Case::II,
            "iii" | "3" => Lemma31Case::III,
            "iv" | "4" => Lemma31Case::IV,
            "v" | "5" => Lemma31Case::V,
            "vi" | "6" => Lemma31Case::VI,
            "vii" | "7" => Lemma31Case::VII,
            "viii" | "8" => Lemma31Case::VIII,
            other => return Err(LabError::param("case", format!("unknown case `{other}`"))),
        })
    }
}

/// Case and predicted constant `C(j, j1, j2)`; the constant is `None` for
/// unclassified triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseAssignment {
    pub case: Lemma31Case,
    pub constant: Option<f64>,
}

fn near(a: u32, b: u32) -> bool {
    a.abs_diff(b) <= 10
}

/// Every case whose side conditions hold for `(j, j1, j2)`, in enumeration
/// order.
pub fn lemma31_matches(j: u32, j1: u32, j2: u32) -> Vec<Lemma31Case> {
    let hi = |x: u32| x >= HIGH;
    let mut out = Vec::new();
    if [j, j1, j2].iter().filter(|&&x| x < HIGH).count() >= 2 {
        out.push(Lemma31Case::I);
    }
    if hi(j1) && hi(j2) && near(j1, j2) && 0 < j && j + 9 < j1 {
        out.push(Lemma31Case::II);
    }
    if hi(j) && hi(j1) && near(j, j1) && 0 < j2 && j2 + 10 < j {
        out.push(Lemma31Case::III);
    }
    if hi(j) && hi(j2) && near(j, j2) && 0 < j1 && j1 + 10 < j {
        out.push(Lemma31Case::IV);
    }
    if hi(j) && hi(j1) && hi(j2) && near(j, j1) && near(j, j2) {
        out.push(Lemma31Case::V);
    }
    if hi(j1) && hi(j2) && j == 0 {
        out.push(Lemma31Case::VI);
    }
    if hi(j) && hi(j1) && j2 == 0 {
        out.push(Lemma31Case::VII);
    }
    if hi(j) && hi(j2) && j1 == 0 {
        out.push(Lemma31Case::VIII);
    }
    out
}

/// The constant attached to a case at `(j, j1, j2)`, without checking the
/// side conditions.
pub fn case_constant(case: Lemma31Case, j: u32, j1: u32, j2: u32) -> Option<f64> {
    let (j, j1, j2) = (f64::from(j), f64::from(j1), f64::from(j2));
    match case {
        Lemma31Case::II => Some(2f64.powf(-3.0 * j / 8.0)),
        Lemma31Case::III => Some(2f64.powf(-(j - j2) / 4.0)),
        Lemma31Case::IV => Some(2f64.powf(-(j - j1) / 4.0)),
        Lemma31Case::Unclassified => None,
        _ => Some(1.0),
    }
}

/// Classifies `(j, j1, j2)`.
///
/// The stated side conditions of (ii) and (v) overlap when `j1 − j = 10`
/// with all three indices high; the earlier case in the enumeration wins.
pub fn lemma31_case(j: u32, j1: u32, j2: u32) -> CaseAssignment {
    let case = lemma31_matches(j, j1, j2)
        .first()
        .copied()
        .unwrap_or(Lemma31Case::Unclassified);
    CaseAssignment {
        case,
        constant: case_constant(case, j, j1, j2),
    }
}

/// Target norm of the dyadic bilinear estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LhsTarget {
    Xmod,
    Y,
}

/// `‖1_{A_j} ξ ⟨τ − p(ξ)⟩^{-1} (F * G)‖` in the modified `X` norm or in `Y`.
pub fn bilinear_lhs(f: &SpacetimeField, g: &SpacetimeField, j: u32, target: LhsTarget) -> Result<f64> {
    f.check_same_lattice(g)?;
    if !f.zero_column_vanishes() || !g.zero_column_vanishes() {
        return Err(LabError::Domain("bilinear inputs need a vanishing xi = 0 column".into()));
    }
    let params = f.params();
    let h = convolve(f, g)?
        .restricted(|_, xi| xi != 0.0 && dyadic_index_xi(xi) == j)
        .multiplied(|tau, xi| {
            let sigma = tau - params.eval_unchecked(xi);
            Complex64::new(xi / bracket(sigma), 0.0)
        });
    norm(&h, match target {
        LhsTarget::Xmod => NormSpec::xmod(),
        LhsTarget::Y => NormSpec::y(),
    })
}

/// Grid realization of one interaction regime at output shell `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma31Geometry {
    pub lattice: ProbeLattice,
    pub f: DyadicSupportSpec,
    pub g: DyadicSupportSpec,
    pub j: u32,
    pub j1: u32,
    pub j2: u32,
}

fn window(lo: f64, hi: f64) -> Region {
    Region::Window { lo, hi }
}

/// Builds the `grid × grid` lattice and input supports realizing `case` with
/// output shell `j`.
///
/// The lattice is rescaled per shell (`Δξ ∝ N`, `Δτ ∝ N³`), and the shell
/// gaps of the regimes are shrunk to what a few hundred cells can resolve:
/// high-high-low uses `j1 = j2 = j + 5`, high-low uses a gap of 3 and the
/// comparable regime uses `j1 = j2 = j − 1`.
pub fn lemma31_geometry(case: Lemma31Case, j: u32, grid: usize) -> Result<Lemma31Geometry> {
    let params = PhaseParams::default();
    let spec = |jj: u32, k_max: u32, sign: SignPattern, lo: f64, hi: f64| {
        DyadicSupportSpec::new(jj, k_max, sign).with_region(window(lo, hi))
    };
    match case {
        Lemma31Case::II => {
            if j == 0 {
                return Err(LabError::Infeasible("case ii needs j > 0".into()));
            }
            let big = j + 5;
            let n = 2f64.powi(big as i32);
            let k_max = 3 * big - 4;
            Ok(Lemma31Geometry {
                lattice: ProbeLattice::new(grid, grid, 2.2 * n.powi(3), 1.5 * n, params)?,
                f: spec(big, k_max, SignPattern::Same, n, 1.25 * n),
                g: spec(big, k_max, SignPattern::Opposite, -1.25 * n, -n),
                j,
                j1: big,
                j2: big,
            })
        }
        Lemma31Case::III | Lemma31Case::IV => {
            if j < 4 {
                return Err(LabError::Infeasible(format!("case {case} needs j >= 4")));
            }
            let n = 2f64.powi(j as i32);
            let k_max = 3 * j - 3;
            let high = spec(j, k_max, SignPattern::Same, 1.1 * n, 1.5 * n);
            let low = spec(j - 3, k_max, SignPattern::Same, 0.125 * n, 0.24 * n);
            let lattice = ProbeLattice::new(grid, grid, 6.0 * n.powi(3), 2.0 * n, params)?;
            Ok(if case == Lemma31Case::III {
                Lemma31Geometry { lattice, f: high, g: low, j, j1: j, j2: j - 3 }
            } else {
                Lemma31Geometry { lattice, f: low, g: high, j, j1: j - 3, j2: j }
            })
        }
        Lemma31Case::V => {
            if j < 2 {
                return Err(LabError::Infeasible("case v needs j >= 2".into()));
            }
            let n = 2f64.powi(j as i32);
            let k_max = 3 * j - 3;
            let s = spec(j - 1, k_max, SignPattern::Same, 0.55 * n, 0.95 * n);
            Ok(Lemma31Geometry {
                lattice: ProbeLattice::new(grid, grid, 7.5 * n.powi(3), 2.0 * n, params)?,
                f: s,
                g: s,
                j,
                j1: j - 1,
                j2: j - 1,
            })
        }
        other => Err(LabError::Infeasible(format!(
            "case {other} has no grid realization in this probe"
        ))),
    }
}

/// Normalized ratio `LHS / (C ‖F‖_X ‖G‖_X)` of one sample; `0` when the
/// left side vanishes.
pub fn lemma31_ratio(
    case: Lemma31Case,
    geom: &Lemma31Geometry,
    f: &SpacetimeField,
    g: &SpacetimeField,
    target: LhsTarget,
) -> Result<f64> {
    let lhs = bilinear_lhs(f, g, geom.j, target)?;
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let c = case_constant(case, geom.j, geom.j1, geom.j2)
        .ok_or_else(|| LabError::Unsupported("unclassified case has no constant".into()))?;
    let rhs = c * norm(f, NormSpec::xmod())? * norm(g, NormSpec::xmod())?;
    Ok(lhs / rhs)
}

/// Settings of a dyadic bilinear probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma31Probe {
    pub case: Lemma31Case,
    pub js: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    pub grid: usize,
    pub target: LhsTarget,
}

impl Lemma31Probe {
    pub fn new(case: Lemma31Case, js: Vec<u32>, samples: usize, seed: u64) -> Self {
        Lemma31Probe {
            case,
            js,
            samples,
            seed,
            grid: 256,
            target: LhsTarget::Xmod,
        }
    }

    pub fn run(&self) -> Result<ProbeReport> {
        if self.samples == 0 || self.js.is_empty() {
            return Err(LabError::param("samples", "need at least one scale and one sample"));
        }
        let mut rows = Vec::with_capacity(self.js.len());
        for (si, &j) in self.js.iter().enumerate() {
            let geom = lemma31_geometry(self.case, j, self.grid)?;
            let ratios = (0..self.samples)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng::substream(self.seed, si as u32, s as u32);
                    let f = trial_field_with(&geom.f, &geom.lattice, &mut r)?;
                    let g = trial_field_with(&geom.g, &geom.lattice, &mut r)?;
                    lemma31_ratio(self.case, &geom, &f, &g, self.target)
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(ScaleRow::from_ratios(2f64.powi(j as i32), &ratios));
        }
        Ok(ProbeReport::new(format!("lemma31-{}", self.case), self.seed, rows)
            .with_meta("grid", self.grid)
            .with_meta("target", self.target)
            .with_meta("js", &self.js))
    }
}

/// Per-shell max/median normalized ratio for `case` with the default
/// `256 × 256` grid and the modified `X` target.
pub fn probe_lemma31(case: Lemma31Case, js: &[u32], samples: usize, seed: u64) -> Result<ProbeReport> {
    Lemma31Probe::new(case, js.to_vec(), samples, seed).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bourgain::{dyadic_index_mod, in_region_d, TauLattice};
    use crate::spectral::SpaceGrid;

    #[test]
    fn classification_examples() {
        let a = lemma31_case(5, 50, 50);
        assert_eq!(a.case, Lemma31Case::II);
        assert_eq!(a.constant, Some(2f64.powf(-15.0 / 8.0)));
        let b = lemma31_case(40, 41, 20);
        assert_eq!(b.case, Lemma31Case::III);
        assert_eq!(b.constant, Some(2f64.powi(-5)));
        assert_eq!(lemma31_case(0, 35, 35).case, Lemma31Case::VI);
        assert_eq!(lemma31_case(40, 20, 41).case, Lemma31Case::IV);
        assert_eq!(lemma31_case(3, 4, 90).case, Lemma31Case::I);
        assert_eq!(lemma31_case(40, 0, 40).case, Lemma31Case::VIII);
        assert_eq!(lemma31_case(40, 40, 0).case, Lemma31Case::VII);
        assert_eq!(lemma31_case(40, 35, 45).case, Lemma31Case::V);
        let gap = lemma31_case(35, 40, 40);
        assert_eq!(gap.case, Lemma31Case::V);
        let gap = lemma31_case(5, 40, 60);
        assert_eq!((gap.case, gap.constant), (Lemma31Case::Unclassified, None));
    }

    #[test]
    fn overlap_only_at_the_ten_gap() {
        for j in 0..80u32 {
            for j1 in 0..80u32 {
                for j2 in 0..80u32 {
                    let m = lemma31_matches(j, j1, j2);
                    if m.len() > 1 {
                        assert_eq!(m, vec![Lemma31Case::II, Lemma31Case::V], "{j} {j1} {j2}");
                        assert_eq!(j1.max(j2) - j, 10);
                    }
                }
            }
        }
    }

    fn small_lattice() -> (TauLattice, SpaceGrid) {
        (
            TauLattice::new(32, 4.0).unwrap(),
            SpaceGrid::with_frequency_spacing(32, 1.0).unwrap(),
        )
    }

    #[test]
    fn lhs_single_cell_closed_form() {
        let (t, x) = small_lattice();
        let p = PhaseParams::default();
        let mut f = SpacetimeField::zeros(t, x, p);
        let mut g = SpacetimeField::zeros(t, x, p);
        // F at (τ, ξ) = (8, 2), G at (4, 3): product lands at (12, 5)
        f.set(18, 18, Complex64::new(2.0, 0.0));
        g.set(17, 19, Complex64::new(0.0, 3.0));
        let (tau, xi) = (12.0, 5.0);
        let j = dyadic_index_xi(xi);
        let sigma = tau - p.eval_unchecked(xi);
        let h = 6.0 * f.cell_area() * xi / bracket(sigma);
        let y_expected = bracket(xi).powf(-0.75) * h * t.dtau() * x.dxi().sqrt();
        let y = bilinear_lhs(&f, &g, j, LhsTarget::Y).unwrap();
        assert!((y - y_expected).abs() <= 1e-12 * y_expected);

        assert!(!in_region_d(tau, xi));
        let k = dyadic_index_mod(tau, xi, p).unwrap();
        let x_expected = 2f64.powf(-0.75 * j as f64) * 2f64.powf(k as f64 / 2.0) * h * f.cell_area().sqrt();
        let xm = bilinear_lhs(&f, &g, j, LhsTarget::Xmod).unwrap();
        assert!((xm - x_expected).abs() <= 1e-12 * x_expected);
        // other shells only see FFT roundoff
        assert!(bilinear_lhs(&f, &g, j + 1, LhsTarget::Xmod).unwrap() <= 1e-12 * xm);
        assert_eq!(bilinear_lhs(&f.scaled(Complex64::new(0.0, 0.0)), &g, j, LhsTarget::Y).unwrap(), 0.0);
    }

    #[test]
    fn lhs_symmetric_and_guarded() {
        let geom = lemma31_geometry(Lemma31Case::V, 4, 64).unwrap();
        let mut r = rng::stream(3, 0);
        let f = trial_field_with(&geom.f, &geom.lattice, &mut r).unwrap();
        let g = trial_field_with(&geom.g, &geom.lattice, &mut r).unwrap();
        let a = bilinear_lhs(&f, &g, 4, LhsTarget::Xmod).unwrap();
        let b = bilinear_lhs(&g, &f, 4, LhsTarget::Xmod).unwrap();
        assert!(a > 0.0 && (a - b).abs() <= 1e-10 * a);

        let mut bad = f.clone();
        bad.set(0, bad.zero_xi_index(), Complex64::new(1.0, 0.0));
        assert!(bilinear_lhs(&bad, &g, 4, LhsTarget::Y).is_err());
    }

    #[test]
    fn geometry_lands_in_target_shells() {
        for case in [Lemma31Case::II, Lemma31Case::III, Lemma31Case::IV, Lemma31Case::V] {
            let geom = lemma31_geometry(case, 6, 128).unwrap();
            let mut r = rng::stream(1, 0);
            let f = trial_field_with(&geom.f, &geom.lattice, &mut r).unwrap();
            let g = trial_field_with(&geom.g, &geom.lattice, &mut r).unwrap();
            for (_, _, _, xi, v) in f.cells() {
                if v.norm() > 0.0 {
                    assert_eq!(dyadic_index_xi(xi), geom.j1);
                }
            }
            for (_, _, _, xi, v) in g.cells() {
                if v.norm() > 0.0 {
                    assert_eq!(dyadic_index_xi(xi), geom.j2);
                }
            }
            assert!(bilinear_lhs(&f, &g, geom.j, LhsTarget::Xmod).unwrap() > 0.0, "{case}");
        }
        assert!(lemma31_geometry(Lemma31Case::VI, 6, 128).is_err());
    }

    #[test]
    fn probe_is_deterministic() {
        let mut p = Lemma31Probe::new(Lemma31Case::V, vec![4, 5], 3, 11);
        p.grid = 64;
        let a = p.run().unwrap();
        let b = p.run().unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite() && a.rows.iter().all(|r| r.max_ratio > 0.0));
    }
}
