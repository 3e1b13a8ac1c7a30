use std::fmt;
use std::io::Read;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rng;
use crate::spectral::{forward_transform, inverse_transform, SpaceGrid, SpectralState};

/// Width of the localized built-in profiles.
pub const PROFILE_WIDTH: f64 = 2.0;
/// `|ξ|` band of the random built-in.
pub const RANDOM_BAND: (f64, f64) = (0.25, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinData {
    /// `A exp(-(x - L/2)²/w²)`.
    Gaussian,
    /// `A sech²((x - L/2)/w)`.
    Sech2,
    /// Complex Gaussian coefficients on a frequency band, real in space.
    RandomBand,
}

impl BuiltinData {
    pub const ALL: [BuiltinData; 3] = [BuiltinData::Gaussian, BuiltinData::Sech2, BuiltinData::RandomBand];
}

impl fmt::Display for BuiltinData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinData::Gaussian => "gaussian",
            BuiltinData::Sech2 => "sech2",
            BuiltinData::RandomBand => "random-band",
        })
    }
}

impl FromStr for BuiltinData {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(BuiltinData::Gaussian),
            "sech2" | "sech²" | "soliton" => Ok(BuiltinData::Sech2),
            "random-band" | "random_band" => Ok(BuiltinData::RandomBand),
            other => Err(LabError::param(
                "data",
                format!("unknown built-in `{other}` (gaussian, sech2, random-band)"),
            )),
        }
    }
}

fn sampled(grid: SpaceGrid, f: impl Fn(f64) -> f64) -> Result<SpectralState> {
    let samples: Vec<f64> = grid.positions().into_iter().map(f).collect();
    Ok(forward_transform(grid, &samples)?.with_mean_removed())
}

/// Mean-zero initial data with peak amplitude `amplitude` (before the mean is
/// removed for the localized profiles). `seed` only affects `RandomBand`.
pub fn builtin_data(kind: BuiltinData, grid: SpaceGrid, amplitude: f64, seed: u64) -> Result<SpectralState> {
    if !amplitude.is_finite() {
        return Err(LabError::param("amplitude", "must be finite"));
    }
    let centre = 0.5 * grid.domain_length();
    match kind {
        BuiltinData::Gaussian => sampled(grid, |x| {
            let z = (x - centre) / PROFILE_WIDTH;
            amplitude * (-z * z).exp()
        }),
        BuiltinData::Sech2 => sampled(grid, |x| {
            let s = 1.0 / ((x - centre) / PROFILE_WIDTH).cosh();
            amplitude * s * s
        }),
        BuiltinData::RandomBand => {
            let mut r = rng::stream(seed, 0);
            let mut u = SpectralState::zeros(grid);
            for k in 1..(grid.n_points() / 2) as i64 {
                let xi = k as f64 * grid.dxi();
                if xi < RANDOM_BAND.0 || xi > RANDOM_BAND.1 {
                    continue;
                }
                let c = Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal));
                u.coeffs_mut()[grid.slot(k).unwrap()] = c;
                u.coeffs_mut()[grid.slot(-k).unwrap()] = c.conj();
            }
            let peak = inverse_transform(&u).into_iter().map(f64::abs).fold(0.0, f64::max);
            if peak == 0.0 {
                return Err(LabError::Infeasible(format!("no {grid} mode lies in the band {RANDOM_BAND:?}")));
            }
            Ok(u.scaled(amplitude / peak))
        }
    }
}

/// Reads `x,u` rows (optional header) sampled on a uniform grid starting at
/// `x = 0`; the sample count must be a power of two. The mean is removed.
pub fn load_csv<R: Read>(input: R) -> Result<SpectralState> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| LabError::param("data", format!("csv row {row}: {e}")))?;
        let parse = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(x), Some(u)) => {
                xs.push(x);
                us.push(u);
            }
            _ if row == 0 => continue,
            _ => return Err(LabError::param("data", format!("csv row {row} is not a numeric x,u pair"))),
        }
    }
    if xs.len() < 2 {
        return Err(LabError::param("data", "csv needs at least two samples"));
    }
    let dx = xs[1] - xs[0];
    if !(dx > 0.0) || xs[0].abs() > 1e-9 * dx {
        return Err(LabError::param("data", "x must start at 0 and increase"));
    }
    for (i, x) in xs.iter().enumerate() {
        if (x - i as f64 * dx).abs() > 1e-6 * dx {
            return Err(LabError::param("data", format!("x is not uniform at row {i}")));
        }
    }
    let grid = SpaceGrid::new(xs.len(), xs.len() as f64 * dx)?;
    Ok(forward_transform(grid, &us)?.with_mean_removed())
}

/// Zero-pads or truncates the coefficients onto an `n`-point grid of the same
/// period.
pub fn resample(state: &SpectralState, n: usize) -> Result<SpectralState> {
    let src = *state.grid();
    let grid = SpaceGrid::new(n, src.domain_length())?;
    let mut out = SpectralState::zeros(grid).with_time(state.time());
    let keep = (src.n_points().min(n) / 2) as i64;
    for k in (1 - keep)..keep {
        out.coeffs_mut()[grid.slot(k).unwrap()] = state.coeffs()[src.slot(k).unwrap()];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_real_mean_zero() {
        let g = SpaceGrid::with_default_length(256).unwrap();
        for kind in BuiltinData::ALL {
            let u = builtin_data(kind, g, 0.3, 4).unwrap();
            assert!(u.is_mean_zero() && u.is_hermitian(1e-12), "{kind}");
            assert!(u.l2_norm() > 0.0);
            assert_eq!(kind.to_string().parse::<BuiltinData>().unwrap(), kind);
        }
        let a = builtin_data(BuiltinData::RandomBand, g, 1.0, 4).unwrap();
        let b = builtin_data(BuiltinData::RandomBand, g, 1.0, 5).unwrap();
        assert_ne!(a, b);
        let peak = inverse_transform(&a).into_iter().map(f64::abs).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = SpaceGrid::new(32, 16.0).unwrap();
        let u = builtin_data(BuiltinData::Sech2, g, 1.0, 0).unwrap();
        let mut text = String::from("x,u\n");
        for (x, v) in g.positions().iter().zip(inverse_transform(&u)) {
            text.push_str(&format!("{x},{v:e}\n"));
        }
        let back = load_csv(text.as_bytes()).unwrap();
        assert_eq!(*back.grid(), g);
        assert!(back.hs_distance(&u, 0.0).unwrap() < 1e-12);
        assert!(load_csv("x,u\n0,1\n1,2\n3,1\n".as_bytes()).is_err());
        assert!(load_csv("0,1\n1,a\n".as_bytes()).is_err());
    }

    #[test]
    fn resample_round_trip() {
        let g = SpaceGrid::with_default_length(64).unwrap();
        let u = builtin_data(BuiltinData::RandomBand, g, 1.0, 1).unwrap();
        let up = resample(&u, 128).unwrap();
        assert!((up.l2_norm() - u.l2_norm()).abs() < 1e-12);
        assert_eq!(resample(&up, 64).unwrap(), u.clone().with_mean_removed());
    }
}
