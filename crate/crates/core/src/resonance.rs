//! Algebraic identities of the phase `p(ξ) = ξ³ − 1/ξ`, the resonance
//! function and its two-sided bound, the `γ_n` recursion, and the
//! classification of frequency triples used by the convolution estimates.
//!
//! Every identity is evaluated in double-double arithmetic: near resonance
//! the left-hand sides cancel `O(ξ³)` terms down to `O(1)` results, which a
//! plain double evaluation cannot resolve to the required relative accuracy.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numerics::Dd;
use crate::rng;

/// Exact split of `x = a + b` where the smaller-magnitude summand is
/// replaced by `fl(a + b) − larger`, so the sum holds without rounding.
fn snap_sum(a: f64, b: f64) -> (f64, f64, f64) {
    let s = a + b;
    if a.abs() >= b.abs() {
        (a, s - a, s)
    } else {
        (s - b, b, s)
    }
}

/// `(ξ1, τ1)`, `(ξ2, τ2)` and their sum `(ξ, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyTriple {
    pub xi1: f64,
    pub xi2: f64,
    pub xi: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau: f64,
}

impl FrequencyTriple {
    /// The smaller of each pair is nudged by at most half an ulp of the sum
    /// so that `ξ = ξ1 + ξ2` and `τ = τ1 + τ2` hold exactly.
    pub fn new(xi1: f64, xi2: f64, tau1: f64, tau2: f64) -> Result<Self> {
        if ![xi1, xi2, tau1, tau2].iter().all(|v| v.is_finite()) {
            return Err(LabError::Domain("frequencies must be finite".into()));
        }
        let (xi1, xi2, xi) = snap_sum(xi1, xi2);
        let (tau1, tau2, tau) = snap_sum(tau1, tau2);
        if xi1 == 0.0 || xi2 == 0.0 {
            return Err(LabError::Domain("xi1 and xi2 must be nonzero".into()));
        }
        Ok(FrequencyTriple {
            xi1,
            xi2,
            xi,
            tau1,
            tau2,
            tau,
        })
    }

    /// Triple with `τ1 = τ2 = 0`.
    pub fn from_xi(xi1: f64, xi2: f64) -> Result<Self> {
        Self::new(xi1, xi2, 0.0, 0.0)
    }

    fn require_nonzero_sum(&self) -> Result<()> {
        if self.xi == 0.0 {
            return Err(LabError::Domain("xi = xi1 + xi2 must be nonzero".into()));
        }
        Ok(())
    }
}

/// Both sides of an identity and their relative residual
/// `|lhs − rhs| / (1 + |lhs|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn from_dd(lhs: Dd, rhs: Dd) -> Self {
        let residual = ((lhs - rhs).abs().to_f64()) / (1.0 + lhs.abs().to_f64());
        IdentityCheck {
            lhs: lhs.to_f64(),
            rhs: rhs.to_f64(),
            residual,
        }
    }
}

fn nonzero(name: &str, v: Dd) -> Result<()> {
    if v.is_zero() {
        return Err(LabError::Domain(format!("{name} must be nonzero")));
    }
    Ok(())
}

fn phase_dd(x: Dd) -> Dd {
    x.cube() - x.recip()
}

/// `a³ − 1/a + b³ − 1/b − (a+b)³/4 + 4/(a+b)`
/// against `(3/4)(a+b)(a−b)²[1 − 4/(3ab(a+b)²)]`.
pub fn identity_a(a: f64, b: f64) -> Result<IdentityCheck> {
    identity_a_dd(Dd::new(a), Dd::new(b))
}

fn identity_a_dd(a: Dd, b: Dd) -> Result<IdentityCheck> {
    let s = a + b;
    let d = a - b;
    nonzero("a", a)?;
    nonzero("b", b)?;
    nonzero("a + b", s)?;
    let lhs = phase_dd(a) + phase_dd(b) - s.cube() * 0.25 + s.recip() * 4.0;
    let factor = Dd::new(1.0) - Dd::new(4.0) / (a * b * s.sqr() * 3.0);
    let rhs = s * d.sqr() * factor * 0.75;
    Ok(IdentityCheck::from_dd(lhs, rhs))
}

/// `(a+b)³ − 1/(a+b) − a³ + 1/a − b³ + 1/b`
/// against `3ab(a+b) + (a² + ab + b²)/(ab(a+b))`.
pub fn identity_b(a: f64, b: f64) -> Result<IdentityCheck> {
    let (a, b) = (Dd::new(a), Dd::new(b));
    let s = a + b;
    nonzero("a", a)?;
    nonzero("b", b)?;
    nonzero("a + b", s)?;
    let lhs = phase_dd(s) - phase_dd(a) - phase_dd(b);
    Ok(IdentityCheck::from_dd(lhs, resonance_sum(a, b)))
}

/// `3ab(a+b) + (a² + ab + b²)/(ab(a+b))`.
fn resonance_sum(a: Dd, b: Dd) -> Dd {
    let s = a + b;
    let prod = a * b * s;
    prod * 3.0 + (a.sqr() + a * b + b.sqr()) / prod
}

/// Resonance `h = (τ − p(ξ)) − (τ1 − p(ξ1)) − (τ2 − p(ξ2))` in closed form
/// `−[3ξξ1ξ2 + (ξ1² + ξ1ξ2 + ξ2²)/(ξξ1ξ2)]`.
pub fn resonance(t: &FrequencyTriple) -> Result<f64> {
    t.require_nonzero_sum()?;
    Ok((-resonance_sum(Dd::new(t.xi1), Dd::new(t.xi2))).to_f64())
}

/// `h` evaluated from its definition as a telescoped modulation sum.
pub fn resonance_by_definition(t: &FrequencyTriple) -> Result<f64> {
    t.require_nonzero_sum()?;
    let m = |tau: f64, xi: f64| Dd::new(tau) - phase_dd(Dd::new(xi));
    Ok((m(t.tau, t.xi) - m(t.tau1, t.xi1) - m(t.tau2, t.xi2)).to_f64())
}

/// `(max{3|ξξ1ξ2|, (ξ1²+ξ1ξ2+ξ2²)/|ξξ1ξ2|}, twice that)`; the modulus of the
/// resonance lies between the two.
pub fn resonance_bounds(t: &FrequencyTriple) -> Result<(f64, f64)> {
    t.require_nonzero_sum()?;
    let (a, b) = (Dd::new(t.xi1), Dd::new(t.xi2));
    let prod = (a * b * (a + b)).abs();
    let first = prod * 3.0;
    let second = (a.sqr() + a * b + b.sqr()) / prod;
    let lower = first.to_f64().max(second.to_f64());
    Ok((lower, 2.0 * lower))
}

/// `τ − ξ³/4 + 4/ξ − (τ1 − p(ξ1)) − (τ2 − p(ξ2))`
/// against `(3/4)ξ(ξ1 − ξ2)²[1 − 4/(3ξ²ξ1ξ2)]`.
pub fn identity_2011(t: &FrequencyTriple) -> Result<IdentityCheck> {
    t.require_nonzero_sum()?;
    let (xi, xi1, xi2) = (Dd::new(t.xi), Dd::new(t.xi1), Dd::new(t.xi2));
    let lhs = Dd::new(t.tau) - xi.cube() * 0.25 + xi.recip() * 4.0
        - (Dd::new(t.tau1) - phase_dd(xi1))
        - (Dd::new(t.tau2) - phase_dd(xi2));
    let factor = Dd::new(1.0) - Dd::new(4.0) / (xi.sqr() * xi1 * xi2 * 3.0);
    let rhs = xi * (xi1 - xi2).sqr() * factor * 0.75;
    Ok(IdentityCheck::from_dd(lhs, rhs))
}

/// With `ξ2 = ξ − ξ1`, `τ2 = τ − τ1`:
/// `τ2 − ξ2³/4 + 4/ξ2 − (τ − p(ξ)) + (τ1 − p(ξ1))`
/// against `(3/4)ξ2(2ξ − ξ2)²[1 + 4/(3ξξ1ξ2²)]`.
pub fn identity_2044(xi: f64, xi1: f64, tau: f64, tau1: f64) -> Result<IdentityCheck> {
    let (x, x1) = (Dd::new(xi), Dd::new(xi1));
    let x2 = Dd::sum_exact(xi, -xi1);
    nonzero("xi", x)?;
    nonzero("xi1", x1)?;
    nonzero("xi2", x2)?;
    let t2 = Dd::sum_exact(tau, -tau1);
    let lhs = t2 - x2.cube() * 0.25 + x2.recip() * 4.0 - (Dd::new(tau) - phase_dd(x))
        + (Dd::new(tau1) - phase_dd(x1));
    let factor = Dd::new(1.0) + Dd::new(4.0) / (x * x1 * x2.sqr() * 3.0);
    let rhs = x2 * (x * 2.0 - x2).sqr() * factor * 0.75;
    Ok(IdentityCheck::from_dd(lhs, rhs))
}

/// The `γ_n` recursion with its stopping data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSequence {
    pub j: u64,
    /// `γ_0, …, γ_N`; the last entry is the first value below 8.
    pub gammas: Vec<f64>,
    /// `Σ_{n<N} γ_n^{-1/2}`.
    pub sum: f64,
    /// Whether `6 ≤ γ_N < 8`.
    pub terminal_in_range: bool,
    /// Whether `γ_n ≥ 2^{N+2-n}` for all `n < N`.
    pub lower_bounds_hold: bool,
}

impl GammaSequence {
    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.gammas.len() - 1
    }
}

/// `(√2 + 1)/2`, the uniform bound on the sum.
pub const GAMMA_SUM_BOUND: f64 = 1.207_106_781_186_547_5;

/// `γ_0 = j/2`, `γ_{n+1} = 2 log₂ γ_n`, stopping at the first `γ_N < 8`.
pub fn gamma_sequence(j: u64) -> Result<GammaSequence> {
    if j < 16 {
        return Err(LabError::param("j", format!("must be >= 16, got {j}")));
    }
    let mut gammas = vec![j as f64 / 2.0];
    while *gammas.last().unwrap() >= 8.0 {
        let g = *gammas.last().unwrap();
        gammas.push(2.0 * g.log2());
    }
    let n = gammas.len() - 1;
    let terms: Vec<f64> = gammas[..n].iter().map(|g| g.powf(-0.5)).collect();
    let last = gammas[n];
    let lower_bounds_hold = gammas[..n]
        .iter()
        .enumerate()
        .all(|(i, g)| *g >= 2f64.powi((n + 2 - i) as i32));
    Ok(GammaSequence {
        j,
        sum: crate::numerics::pairwise_sum(&terms),
        terminal_in_range: (6.0..8.0).contains(&last),
        lower_bounds_hold,
        gammas,
    })
}

/// Which convolution estimate a frequency configuration falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseLabel {
    SignSplit,
    FactorLarge,
    FactorSmall,
}

fn classify_factor(f: f64) -> CaseLabel {
    if (1.0 - f).abs() <= 0.5 {
        CaseLabel::FactorSmall
    } else {
        CaseLabel::FactorLarge
    }
}

/// Opposite signs of `ξ1, ξ2`, or else the size of `1 − 4/(3ξ²ξ1ξ2)`
/// relative to `1/2`.
pub fn case_condition(t: &FrequencyTriple) -> Result<CaseLabel> {
    t.require_nonzero_sum()?;
    if t.xi1 * t.xi2 < 0.0 {
        return Ok(CaseLabel::SignSplit);
    }
    Ok(classify_factor(4.0 / (3.0 * t.xi * t.xi * t.xi1 * t.xi2)))
}

/// Mirrored classification with the output frequency `ξ` against one input
/// `ξ1`: same signs of `ξ, ξ1`, or else the size of `1 + 4/(3ξξ1ξ2²)`.
pub fn case_condition_mirrored(t: &FrequencyTriple) -> Result<CaseLabel> {
    t.require_nonzero_sum()?;
    if t.xi * t.xi1 > 0.0 {
        return Ok(CaseLabel::SignSplit);
    }
    Ok(classify_factor(-4.0 / (3.0 * t.xi * t.xi1 * t.xi2 * t.xi2)))
}

/// The product window `8/(9ξ²) ≤ ξ1(ξ − ξ1) ≤ 8/(3ξ²)` equivalent to the
/// small-factor condition.
pub fn factor_small_product_window(xi: f64) -> (f64, f64) {
    (8.0 / (9.0 * xi * xi), 8.0 / (3.0 * xi * xi))
}

/// The (at most two) `ξ1` intervals on which the small-factor condition
/// holds for a given `ξ`, from the roots of `ξ1(ξ − ξ1) = c`.
pub fn factor_small_root_windows(xi: f64) -> Vec<(f64, f64)> {
    let (c_lo, c_hi) = factor_small_product_window(xi);
    let roots = |c: f64| {
        let disc = (xi * xi - 4.0 * c).max(0.0).sqrt();
        ((xi - disc) / 2.0, (xi + disc) / 2.0)
    };
    if xi * xi < 4.0 * c_lo {
        return Vec::new();
    }
    let (a_lo, a_hi) = roots(c_lo);
    let (b_lo, b_hi) = roots(c_hi);
    if b_lo >= b_hi {
        return vec![(a_lo, a_hi)];
    }
    vec![(a_lo, b_lo), (b_hi, a_hi)]
}

/// Draws `x` with `log₂|x|` uniform on `[lo_exp, hi_exp]` and a random sign.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    let mag = 2f64.powf(rng.random_range(lo_exp..=hi_exp));
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Aggregate of the identity suite over random samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySuiteReport {
    pub samples: usize,
    pub seed: u64,
    pub max_residual_a: f64,
    pub max_residual_b: f64,
    pub max_residual_2011: f64,
    pub max_residual_2044: f64,
    /// Largest `|closed form − definition| / (1 + |h|)`.
    pub max_residual_resonance: f64,
    pub sandwich_violations: usize,
    pub partition_violations: usize,
    pub window_violations: usize,
}

impl IdentitySuiteReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.max_residual_a,
            self.max_residual_b,
            self.max_residual_2011,
            self.max_residual_2044,
            self.max_residual_resonance,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Default, Clone, Copy)]
struct Chunk {
    a: f64,
    b: f64,
    e2011: f64,
    e2044: f64,
    res: f64,
    sandwich: usize,
    partition: usize,
    window: usize,
}

impl Chunk {
    fn merge(self, o: Chunk) -> Chunk {
        Chunk {
            a: self.a.max(o.a),
            b: self.b.max(o.b),
            e2011: self.e2011.max(o.e2011),
            e2044: self.e2044.max(o.e2044),
            res: self.res.max(o.res),
            sandwich: self.sandwich + o.sandwich,
            partition: self.partition + o.partition,
            window: self.window + o.window,
        }
    }
}

const CHUNK: usize = 4096;

fn in_windows(windows: &[(f64, f64)], x: f64) -> bool {
    windows.iter().any(|&(lo, hi)| {
        let slack = 1e-9 * (lo.abs() + hi.abs());
        x >= lo - slack && x <= hi + slack
    })
}

fn run_chunk(seed: u64, index: usize, count: usize) -> Chunk {
    let mut rng = rng::stream(seed, index as u64);
    let mut out = Chunk::default();
    let mut done = 0;
    while done < count {
        let xi1 = log_uniform(&mut rng, -10.0, 10.0);
        let xi2 = log_uniform(&mut rng, -10.0, 10.0);
        let tau1 = log_uniform(&mut rng, -10.0, 30.0);
        let tau2 = log_uniform(&mut rng, -10.0, 30.0);
        let Ok(t) = FrequencyTriple::new(xi1, xi2, tau1, tau2) else {
            continue;
        };
        if t.xi == 0.0 {
            continue;
        }
        done += 1;
        out.a = out.a.max(identity_a(t.xi1, t.xi2).unwrap().residual);
        out.b = out.b.max(identity_b(t.xi1, t.xi2).unwrap().residual);
        out.e2011 = out.e2011.max(identity_2011(&t).unwrap().residual);
        out.e2044 = out.e2044.max(identity_2044(t.xi, t.xi1, t.tau, t.tau1).unwrap().residual);
        let h = resonance(&t).unwrap();
        let hd = resonance_by_definition(&t).unwrap();
        out.res = out.res.max((h - hd).abs() / (1.0 + h.abs()));
        let (lo, hi) = resonance_bounds(&t).unwrap();
        if !(lo <= h.abs() && h.abs() <= hi) {
            out.sandwich += 1;
        }
        let label = case_condition(&t).unwrap();
        let sign = t.xi1 * t.xi2 < 0.0;
        let small = !sign && (1.0 - 4.0 / (3.0 * t.xi * t.xi * t.xi1 * t.xi2)).abs() <= 0.5;
        let expected = match (sign, small) {
            (true, _) => CaseLabel::SignSplit,
            (false, true) => CaseLabel::FactorSmall,
            (false, false) => CaseLabel::FactorLarge,
        };
        if label != expected {
            out.partition += 1;
        }
        if label == CaseLabel::FactorSmall && !in_windows(&factor_small_root_windows(t.xi), t.xi1) {
            out.window += 1;
        }
    }
    out
}

/// Evaluates all identities, the closed form of the resonance and the
/// sandwich bound on `samples` random triples with `|ξ1|, |ξ2|` log-uniform
/// in `[2^{-10}, 2^{10}]`.
pub fn identity_suite(samples: usize, seed: u64) -> IdentitySuiteReport {
    let chunks = samples.div_ceil(CHUNK);
    let total = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(seed, c, CHUNK.min(samples - c * CHUNK)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Chunk::default(), Chunk::merge);
    IdentitySuiteReport {
        samples,
        seed,
        max_residual_a: total.a,
        max_residual_b: total.b,
        max_residual_2011: total.e2011,
        max_residual_2044: total.e2044,
        max_residual_resonance: total.res,
        sandwich_violations: total.sandwich,
        partition_violations: total.partition,
        window_violations: total.window,
    }
}
