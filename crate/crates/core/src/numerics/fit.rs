use serde::{Deserialize, Serialize};

/// Least-squares line through `(log₂ x, log₂ y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log₂ units.
    pub residual: f64,
}

/// Fit `log₂ y = slope · log₂ x + intercept`.
///
/// Returns `None` when fewer than three points are supplied or any value is
/// not strictly positive and finite.
pub fn fit_log2_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let ok = |v: &f64| v.is_finite() && *v > 0.0;
    if !xs.iter().all(ok) || !ys.iter().all(ok) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Some(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}
