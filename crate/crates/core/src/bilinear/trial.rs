use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bourgain::{dyadic_index_mod, dyadic_index_xi, in_region_d, SpacetimeField, TauLattice};
use crate::error::{LabError, Result};
use crate::rng;
use crate::spectral::{PhaseParams, SpaceGrid};

/// Which signs of `ξ` a trial support may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignPattern {
    /// `ξ > 0`; paired with another `Same` spec both factors share a sign.
    Same,
    /// `ξ < 0`; paired with a `Same` spec the factors have opposite signs.
    Opposite,
    Any,
}

/// Optional restriction of a support (or of an output set `Ω`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    D,
    Dc,
    /// `lo ≤ ξ ≤ hi`, all `τ`.
    Window { lo: f64, hi: f64 },
}

impl Region {
    pub fn contains(&self, tau: f64, xi: f64) -> bool {
        match *self {
            Region::D => in_region_d(tau, xi),
            Region::Dc => !in_region_d(tau, xi),
            Region::Window { lo, hi } => lo <= xi && xi <= hi,
        }
    }
}

/// Admissible support of a random trial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicSupportSpec {
    pub j: u32,
    pub k_max: u32,
    pub sign_pattern: SignPattern,
    /// Minimum distance `|ξ1 − ξ2|` to the partner support, enforced by
    /// [`make_trial_pair`].
    pub separation: f64,
    pub region: Option<Region>,
}

impl DyadicSupportSpec {
    pub fn new(j: u32, k_max: u32, sign_pattern: SignPattern) -> Self {
        DyadicSupportSpec {
            j,
            k_max,
            sign_pattern,
            separation: 0.0,
            region: None,
        }
    }

    pub fn with_separation(mut self, k: f64) -> Self {
        self.separation = k;
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(LabError::param(
                "separation",
                format!("must be finite and >= 0, got {}", self.separation),
            ));
        }
        if let Some(Region::Window { lo, hi }) = self.region {
            if !(lo <= hi) {
                return Err(LabError::param("region", format!("empty window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Whether the cell `(τ, ξ)` is admissible (ignoring separation).
    pub fn admits(&self, tau: f64, xi: f64, params: PhaseParams) -> bool {
        if xi == 0.0 || dyadic_index_xi(xi) != self.j {
            return false;
        }
        let sign_ok = match self.sign_pattern {
            SignPattern::Same => xi > 0.0,
            SignPattern::Opposite => xi < 0.0,
            SignPattern::Any => true,
        };
        sign_ok
            && self.region.is_none_or(|r| r.contains(tau, xi))
            && dyadic_index_mod(tau, xi, params).is_ok_and(|k| k <= self.k_max)
    }
}

/// The `(τ, ξ)` lattice shared by the inputs and output of a probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeLattice {
    pub tau: TauLattice,
    pub xi: SpaceGrid,
    pub params: PhaseParams,
}

impl ProbeLattice {
    /// `m × n` lattice covering `|τ| ≤ tau_extent`, `|ξ| ≤ xi_extent`.
    pub fn new(m: usize, n: usize, tau_extent: f64, xi_extent: f64, params: PhaseParams) -> Result<Self> {
        Ok(ProbeLattice {
            tau: TauLattice::covering(m, tau_extent)?,
            xi: SpaceGrid::with_frequency_spacing(n, 2.0 * xi_extent / n as f64)?,
            params,
        })
    }

    pub fn zeros(&self) -> SpacetimeField {
        SpacetimeField::zeros(self.tau, self.xi, self.params)
    }
}

fn fill(
    lattice: &ProbeLattice,
    rng: &mut impl Rng,
    mut admits: impl FnMut(f64, f64) -> bool,
    what: &str,
) -> Result<SpacetimeField> {
    let mut field = lattice.zeros();
    let mut hits = 0usize;
    for l in 0..field.n_tau() {
        let tau = field.tau_value(l);
        for k in 0..field.n_xi() {
            if admits(tau, field.xi_value(k)) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                field.set(l, k, Complex64::new(re, im));
                hits += 1;
            }
        }
    }
    if hits == 0 {
        return Err(LabError::Infeasible(format!("{what}: no lattice cell is admissible")));
    }
    Ok(field.normalized())
}

/// Unit-`L²` field with complex Gaussian amplitudes on the admissible cells.
pub fn make_trial_field(spec: &DyadicSupportSpec, lattice: &ProbeLattice, seed: u64) -> Result<SpacetimeField> {
    spec.validate()?;
    let mut rng = rng::stream(seed, 0);
    trial_field_with(spec, lattice, &mut rng)
}

pub(crate) fn trial_field_with(
    spec: &DyadicSupportSpec,
    lattice: &ProbeLattice,
    rng: &mut impl Rng,
) -> Result<SpacetimeField> {
    let params = lattice.params;
    fill(lattice, rng, |t, x| spec.admits(t, x, params), "trial spec")
}

/// Two trial fields whose `ξ` supports are at least
/// `max(f.separation, g.separation)` apart.
pub fn make_trial_pair(
    spec_f: &DyadicSupportSpec,
    spec_g: &DyadicSupportSpec,
    lattice: &ProbeLattice,
    seed: u64,
) -> Result<(SpacetimeField, SpacetimeField)> {
    let mut rng = rng::stream(seed, 0);
    trial_pair_with(spec_f, spec_g, lattice, &mut rng)
}

pub(crate) fn trial_pair_with(
    spec_f: &DyadicSupportSpec,
    spec_g: &DyadicSupportSpec,
    lattice: &ProbeLattice,
    rng: &mut impl Rng,
) -> Result<(SpacetimeField, SpacetimeField)> {
    spec_f.validate()?;
    spec_g.validate()?;
    let f = trial_field_with(spec_f, lattice, rng)?;
    let sep = spec_f.separation.max(spec_g.separation);
    let f_support = f.xi_support();
    let params = lattice.params;
    let g = fill(
        lattice,
        rng,
        |t, x| spec_g.admits(t, x, params) && f_support.iter().all(|y| (x - y).abs() >= sep),
        "partner spec",
    )?;
    Ok((f, g))
}

/// `inf |ξ1 − ξ2|` over the `ξ` supports of two fields.
pub fn support_separation(f: &SpacetimeField, g: &SpacetimeField) -> f64 {
    let (a, b) = (f.xi_support(), g.xi_support());
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).abs()))
        .fold(f64::INFINITY, f64::min)
}
