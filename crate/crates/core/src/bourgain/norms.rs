use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dyadic::{decompose, in_region_d};
use super::field::SpacetimeField;
use crate::error::{LabError, Result};
use crate::numerics::{bracket, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormVariant {
    Xsb,
    Xsb1,
    Xmod,
    Y,
    Hs,
}

/// Which norm to evaluate, with its regularity indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub b: f64,
    pub variant: NormVariant,
}

impl NormSpec {
    pub fn xsb(s: f64, b: f64) -> Self {
        NormSpec {
            s,
            b,
            variant: NormVariant::Xsb,
        }
    }

    pub fn xsb1(s: f64, b: f64) -> Self {
        NormSpec {
            s,
            b,
            variant: NormVariant::Xsb1,
        }
    }

    /// The modified norm, always at `(s, b) = (-3/4, 1/2)`.
    pub fn xmod() -> Self {
        NormSpec {
            s: -0.75,
            b: 0.5,
            variant: NormVariant::Xmod,
        }
    }

    pub fn y() -> Self {
        NormSpec {
            s: -0.75,
            b: 0.0,
            variant: NormVariant::Y,
        }
    }

    pub fn hs(s: f64) -> Self {
        NormSpec {
            s,
            b: 0.0,
            variant: NormVariant::Hs,
        }
    }

    fn uses_modulation(&self) -> bool {
        match self.variant {
            NormVariant::Xsb => self.b != 0.0,
            NormVariant::Xsb1 | NormVariant::Xmod => true,
            NormVariant::Y | NormVariant::Hs => false,
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            NormVariant::Xsb => write!(f, "Xsb(s={},b={})", self.s, self.b),
            NormVariant::Xsb1 => write!(f, "Xsb1(s={},b={})", self.s, self.b),
            NormVariant::Xmod => write!(f, "Xmod"),
            NormVariant::Y => write!(f, "Y"),
            NormVariant::Hs => write!(f, "Hs(s={})", self.s),
        }
    }
}

impl FromStr for NormSpec {
    type Err = LabError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, args) = match text.find('(') {
            Some(open) => {
                let close = text
                    .strip_suffix(')')
                    .ok_or_else(|| LabError::param("norm", format!("unbalanced parentheses in `{text}`")))?;
                (&text[..open], &close[open + 1..])
            }
            None => (text, ""),
        };
        let mut kv = BTreeMap::new();
        for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| LabError::param("norm", format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| LabError::param("norm", format!("bad number in `{part}`")))?;
            if !v.is_finite() {
                return Err(LabError::param("norm", format!("non-finite value in `{part}`")));
            }
            kv.insert(k.trim().to_ascii_lowercase(), v);
        }
        let take = |kv: &mut BTreeMap<String, f64>, key: &str| {
            kv.remove(key)
                .ok_or_else(|| LabError::param("norm", format!("`{text}` is missing `{key}`")))
        };
        let spec = match head.trim().to_ascii_lowercase().as_str() {
            "xsb" => {
                let s = take(&mut kv, "s")?;
                NormSpec::xsb(s, take(&mut kv, "b")?)
            }
            "xsb1" => {
                let s = take(&mut kv, "s")?;
                NormSpec::xsb1(s, take(&mut kv, "b")?)
            }
            "xmod" | "x" => NormSpec::xmod(),
            "y" => NormSpec::y(),
            "hs" => NormSpec::hs(take(&mut kv, "s")?),
            other => {
                return Err(LabError::param(
                    "norm",
                    format!("unknown norm `{other}` (expected Xsb, Xsb1, Xmod, Y or Hs)"),
                ))
            }
        };
        if let Some(k) = kv.keys().next() {
            return Err(LabError::param("norm", format!("unexpected key `{k}` in `{text}`")));
        }
        Ok(spec)
    }
}

fn check_zero_column(field: &SpacetimeField, spec: &NormSpec) -> Result<()> {
    if spec.uses_modulation() && !field.zero_column_vanishes() {
        return Err(LabError::Domain(format!(
            "{spec} weights the modulation, which is undefined on the nonzero xi = 0 column"
        )));
    }
    Ok(())
}

fn xsb(field: &SpacetimeField, s: f64, b: f64) -> f64 {
    let params = field.params();
    let terms: Vec<f64> = field
        .cells()
        .filter(|c| c.4.norm_sqr() != 0.0)
        .map(|(_, _, tau, xi, v)| {
            let w = if b == 0.0 {
                bracket(xi).powf(2.0 * s)
            } else {
                bracket(xi).powf(2.0 * s) * bracket(tau - params.eval_unchecked(xi)).powf(2.0 * b)
            };
            w * v.norm_sqr()
        })
        .collect();
    (pairwise_sum(&terms) * field.cell_area()).sqrt()
}

/// `[Σ_j (2^{js} Σ_k 2^{bk} ‖F‖_{L²(A_j∩B_k)})²]^{1/2}`.
fn xsb1(field: &SpacetimeField, s: f64, b: f64) -> f64 {
    let dec = decompose(field);
    let mut per_j: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for ((j, k), m) in &dec.masses {
        per_j.entry(*j).or_default().push(2f64.powf(b * *k as f64) * m);
    }
    let terms: Vec<f64> = per_j
        .iter()
        .map(|(j, ms)| (2f64.powf(s * *j as f64) * pairwise_sum(ms)).powi(2))
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// `‖⟨ξ⟩^s F‖_{L²_ξ L¹_τ}` with the trapezoid rule in `τ`.
fn mixed_l2_l1(field: &SpacetimeField, s: f64) -> f64 {
    let (m, n) = (field.n_tau(), field.n_xi());
    let dtau = field.tau_lattice().dtau();
    let terms: Vec<f64> = (0..n)
        .map(|k| {
            let col: Vec<f64> = (0..m)
                .map(|l| {
                    let a = field.get(l, k).norm();
                    if l == 0 || l == m - 1 {
                        0.5 * a
                    } else {
                        a
                    }
                })
                .collect();
            let inner = pairwise_sum(&col) * dtau;
            bracket(field.xi_value(k)).powf(2.0 * s) * inner * inner
        })
        .collect();
    (pairwise_sum(&terms) * field.xi_grid().dxi()).sqrt()
}

/// `‖⟨ξ⟩^s F‖_{L²_ξ L^p_τ}` with the rectangle rule in `τ`.
pub fn mixed_l2_lp(field: &SpacetimeField, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(LabError::param("p", format!("must be in [1, inf), got {p}")));
    }
    let (m, n) = (field.n_tau(), field.n_xi());
    let dtau = field.tau_lattice().dtau();
    let terms: Vec<f64> = (0..n)
        .map(|k| {
            let col: Vec<f64> = (0..m).map(|l| field.get(l, k).norm().powf(p)).collect();
            let inner = (pairwise_sum(&col) * dtau).powf(1.0 / p);
            bracket(field.xi_value(k)).powf(2.0 * s) * inner * inner
        })
        .collect();
    Ok((pairwise_sum(&terms) * field.xi_grid().dxi()).sqrt())
}

/// The two summands of the modified norm: `(D^c part, D part)`.
pub fn xmod_parts(field: &SpacetimeField) -> Result<(f64, f64)> {
    check_zero_column(field, &NormSpec::xmod())?;
    let dc = field.restricted(|tau, xi| !in_region_d(tau, xi));
    let d = field.restricted(in_region_d);
    Ok((xsb1(&dc, -0.75, 0.5), xsb(&d, -0.75, 0.5)))
}

/// Evaluates `spec` on `F`.
///
/// Variants that weight the modulation `⟨τ − p(ξ)⟩` need a vanishing
/// `ξ = 0` column.
pub fn norm(field: &SpacetimeField, spec: NormSpec) -> Result<f64> {
    check_zero_column(field, &spec)?;
    Ok(match spec.variant {
        NormVariant::Xsb => xsb(field, spec.s, spec.b),
        NormVariant::Xsb1 => xsb1(field, spec.s, spec.b),
        NormVariant::Xmod => {
            let (dc, d) = xmod_parts(field)?;
            dc + d
        }
        NormVariant::Y => mixed_l2_l1(field, spec.s),
        NormVariant::Hs => xsb(field, spec.s, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bourgain::dyadic::{dyadic_index_mod, dyadic_index_xi};
    use crate::bourgain::field::TauLattice;
    use crate::spectral::{PhaseParams, SpaceGrid};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice() -> (TauLattice, SpaceGrid) {
        (
            TauLattice::new(64, 40.0).unwrap(),
            SpaceGrid::with_frequency_spacing(64, 1.0 / 64.0).unwrap(),
        )
    }

    fn random_field(seed: u64) -> SpacetimeField {
        let (t, x) = lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpacetimeField::from_fn(t, x, PhaseParams::default(), |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap();
        let k0 = f.zero_xi_index();
        for l in 0..f.n_tau() {
            f.set(l, k0, Complex64::new(0.0, 0.0));
        }
        f
    }

    fn all_specs() -> Vec<NormSpec> {
        vec![
            NormSpec::xsb(-0.75, 0.5),
            NormSpec::xsb1(-0.75, 0.5),
            NormSpec::xmod(),
            NormSpec::y(),
            NormSpec::hs(-0.75),
        ]
    }

    #[test]
    fn parse_round_trip() {
        for text in ["Xsb(s=-0.75,b=0.5)", "Xsb1(s=0,b=1)", "Xmod", "Y", "Hs(s=-0.75)"] {
            let spec: NormSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert_eq!("xsb( b = 0.6 , s=-0.75 )".parse::<NormSpec>().unwrap(), NormSpec::xsb(-0.75, 0.6));
        assert!("Xsb(s=1)".parse::<NormSpec>().is_err());
        assert!("Xsb(s=1,b=2,c=3)".parse::<NormSpec>().is_err());
        assert!("Zsb".parse::<NormSpec>().is_err());
        assert!("Hs(s=-0.75".parse::<NormSpec>().is_err());
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let (t, x) = lattice();
        let f = SpacetimeField::zeros(t, x, PhaseParams::default());
        for spec in all_specs() {
            assert_eq!(norm(&f, spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_cell_values() {
        let (t, x) = lattice();
        let mut f = SpacetimeField::zeros(t, x, PhaseParams::default());
        f.set(10, 40, Complex64::new(0.0, 2.0));
        let mass = 2.0 * f.cell_area().sqrt();
        assert!((norm(&f, NormSpec::xsb(0.0, 0.0)).unwrap() - mass).abs() < 1e-15);
        let (tau, xi) = (f.tau_value(10), f.xi_value(40));
        let w = bracket(xi).powf(-0.75) * bracket(tau - f.params().eval_unchecked(xi)).powf(0.5);
        let v = norm(&f, NormSpec::xsb(-0.75, 0.5)).unwrap();
        assert!((v - w * mass).abs() < 1e-13 * v);
    }

    #[test]
    fn modulation_norms_reject_zero_column() {
        let (t, x) = lattice();
        let mut f = SpacetimeField::zeros(t, x, PhaseParams::default());
        let k0 = f.zero_xi_index();
        f.set(3, k0, Complex64::new(1.0, 0.0));
        assert!(norm(&f, NormSpec::xsb(0.0, 0.5)).is_err());
        assert!(norm(&f, NormSpec::xsb1(0.0, 0.0)).is_err());
        assert!(norm(&f, NormSpec::xmod()).is_err());
        assert!(norm(&f, NormSpec::hs(-0.75)).is_ok());
        assert!(norm(&f, NormSpec::y()).is_ok());
        assert!(norm(&f, NormSpec::xsb(-0.75, 0.0)).is_ok());
    }

    #[test]
    fn single_shell_bracketing() {
        // one (j, k) cell: the ℓ¹ and ℓ² forms agree up to the dyadic slack
        let base = random_field(3);
        let p = base.params();
        let shell = |tau: f64, xi: f64| (dyadic_index_xi(xi), dyadic_index_mod(tau, xi, p).unwrap());
        let target = shell(base.tau_value(20), base.xi_value(40));
        let f = base.restricted(|tau, xi| xi != 0.0 && shell(tau, xi) == target);
        assert!(!f.is_zero());
        for b in [-0.5, 0.0, 0.5, 1.0] {
            let r = norm(&f, NormSpec::xsb1(0.0, b)).unwrap() / norm(&f, NormSpec::xsb(0.0, b)).unwrap();
            let slack = 2f64.powf(b.abs());
            assert!(r >= 1.0 / slack - 1e-12 && r <= slack + 1e-12, "b={b} r={r}");
        }
    }

    #[test]
    fn y_norm_matches_direct_trapezoid() {
        let f = random_field(5);
        let dtau = f.tau_lattice().dtau();
        let mut acc = 0.0;
        for k in 0..f.n_xi() {
            let col: Vec<f64> = (0..f.n_tau()).map(|l| f.get(l, k).norm()).collect();
            let mut inner = 0.0;
            for w in col.windows(2) {
                inner += 0.5 * (w[0] + w[1]) * dtau;
            }
            acc += bracket(f.xi_value(k)).powf(-1.5) * inner * inner;
        }
        let direct = (acc * f.xi_grid().dxi()).sqrt();
        let y = norm(&f, NormSpec::y()).unwrap();
        assert!((y - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn xmod_is_sum_of_its_d_split() {
        let f = random_field(7);
        let d = f.restricted(in_region_d);
        let dc = f.restricted(|a, b| !in_region_d(a, b));
        let whole = norm(&f, NormSpec::xmod()).unwrap();
        let parts = norm(&d, NormSpec::xmod()).unwrap() + norm(&dc, NormSpec::xmod()).unwrap();
        assert!((whole - parts).abs() <= 1e-14 * whole);
        let (a, b) = xmod_parts(&f).unwrap();
        assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn lp_norm_at_two_is_hs() {
        let f = random_field(9);
        let a = mixed_l2_lp(&f, -0.75, 2.0).unwrap();
        let b = norm(&f, NormSpec::hs(-0.75)).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
        assert!(mixed_l2_lp(&f, 0.0, 0.5).is_err());
    }
}
