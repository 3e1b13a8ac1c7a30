use serde::Serialize;

use super::geometry::{Parallelogram, Point};
use super::report::{ProbeReport, ScaleRow};
use crate::bourgain::{NormSpec, NormVariant};
use crate::error::{LabError, Result};
use crate::numerics::{bracket, fit_log2_slope, Dd, GaussLegendre, SlopeFit};
use crate::spectral::PhaseParams;

/// The thin slab along the characteristic direction `(3N², 1)` near
/// `(N³, N)`.
pub fn counterexample_rect(n: f64) -> Result<Parallelogram> {
    if !(n >= 64.0 && n.is_finite()) {
        return Err(LabError::param("N", format!("must be >= 64, got {n}")));
    }
    let a = n.powf(-0.5) / 3.0;
    let long = n.powf(1.5);
    let short = 1.0 / 3.0 + a * a * a;
    Parallelogram::new(
        (n * n * n, n),
        [(0.0, 0.0), (long, a), (long + short, a), (short, 0.0)],
    )
}

/// The slab translated to be centred at the origin.
pub fn counterexample_r0(n: f64) -> Result<Parallelogram> {
    Ok(counterexample_rect(n)?.centered())
}

/// `τ − p(ξ)` at `offset + local`, keeping the large parts of the offset
/// exact.
fn modulation_local(offset: Point, base: f64, local: Point, params: PhaseParams) -> f64 {
    let (lt, lx) = local;
    let xo = offset.1;
    if xo == 0.0 {
        return offset.0 + lt - params.eval_unchecked(lx);
    }
    let dp = -params.beta * lx * (3.0 * xo * xo + 3.0 * xo * lx + lx * lx)
        + params.gamma * lx / (xo * (xo + lx));
    base + lt - dp
}

/// `τ_o − p(ξ_o)` in double-double.
fn offset_modulation(offset: Point, params: PhaseParams) -> f64 {
    if offset.1 == 0.0 {
        return 0.0;
    }
    let x = Dd::new(offset.1);
    (Dd::new(offset.0) + Dd::new(params.beta) * x.cube() + Dd::new(params.gamma) / x).to_f64()
}

const GL_ORDER: usize = 10;
const MAX_LEVELS: usize = 64;
const REL_TOL: f64 = 1e-4;

/// Nodes on `[a, b]` graded towards both ends; an end flagged singular is
/// approached through `x = end ± len·u⁸`.
fn nodes_1d(gl: &GaussLegendre, a: f64, b: f64, levels: usize, sing_a: bool, sing_b: bool) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    if !sing_a && !sing_b {
        return gl.graded(a, b, levels);
    }
    let mid = 0.5 * (a + b);
    let mut out = Vec::new();
    let mut half = |end: f64, other: f64, sing: bool| {
        if !sing {
            let (lo, hi) = if end < other { (end, other) } else { (other, end) };
            out.extend(gl.graded(lo, hi, levels));
            return;
        }
        let len = other - end;
        for (u, w) in gl.graded(0.0, 1.0, levels) {
            let u7 = u.powi(7);
            out.push((end + len * u7 * u, w * 8.0 * u7 * len.abs()));
        }
    };
    half(a, mid, sing_a);
    half(b, mid, sing_b);
    out
}

/// Breakpoints of `[0, extent]` plus singular flags per sub-interval end.
fn pieces(extent: f64, kinks: &[f64], singular: Option<f64>) -> Vec<(f64, f64, bool, bool)> {
    let mut cuts = vec![0.0, extent];
    cuts.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < extent));
    if let Some(s) = singular {
        if s > 0.0 && s < extent {
            cuts.push(s);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let is_s = |x: f64| singular.is_some_and(|s| (x - s).abs() <= 1e-15 * extent.max(1.0));
            (w[0], w[1], is_s(w[0]), is_s(w[1]))
        })
        .collect()
}

/// `∫∫_{[0,S]²} f(σ, t) dσ dt` by tensor graded Gauss–Legendre, with the
/// `ξ = 0` crossing (when `ξ` depends on `σ` only) treated as singular.
fn frame_quadrature(
    extent: f64,
    kinks: &[f64],
    xi_zero_sigma: Option<f64>,
    levels: usize,
    f: &impl Fn(f64, f64) -> f64,
) -> f64 {
    let gl = GaussLegendre::new(GL_ORDER);
    let sig: Vec<(f64, f64)> = pieces(extent, kinks, xi_zero_sigma)
        .into_iter()
        .flat_map(|(a, b, sa, sb)| nodes_1d(&gl, a, b, levels, sa, sb))
        .collect();
    let ts: Vec<(f64, f64)> = pieces(extent, kinks, None)
        .into_iter()
        .flat_map(|(a, b, _, _)| nodes_1d(&gl, a, b, levels, false, false))
        .collect();
    let rows: Vec<f64> = sig
        .iter()
        .map(|&(s, ws)| ws * ts.iter().map(|&(t, wt)| wt * f(s, t)).sum::<f64>())
        .collect();
    crate::numerics::pairwise_sum(&rows)
}

fn refine(run: impl Fn(usize) -> f64) -> Result<f64> {
    let mut levels = 4;
    let mut prev = run(levels);
    while levels < MAX_LEVELS {
        levels *= 2;
        let cur = run(levels);
        if (cur - prev).abs() <= REL_TOL * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(LabError::Divergence(format!(
        "quadrature did not settle within {MAX_LEVELS} levels"
    )))
}

/// Frame data of a parallelogram-shaped integration domain
/// `offset + base + σ e1 + t e2`.
struct Frame {
    offset: Point,
    base: Point,
    e1: Point,
    e2: Point,
    det: f64,
    mod0: f64,
    params: PhaseParams,
}

impl Frame {
    fn new(offset: Point, base: Point, e1: Point, e2: Point, params: PhaseParams) -> Self {
        Frame {
            offset,
            base,
            e1,
            e2,
            det: (e1.0 * e2.1 - e1.1 * e2.0).abs(),
            mod0: offset_modulation(offset, params),
            params,
        }
    }

    fn local(&self, s: f64, t: f64) -> Point {
        (
            self.base.0 + s * self.e1.0 + t * self.e2.0,
            self.base.1 + s * self.e1.1 + t * self.e2.1,
        )
    }

    fn xi(&self, local: Point) -> f64 {
        self.offset.1 + local.1
    }

    fn modulation(&self, local: Point) -> f64 {
        modulation_local(self.offset, self.mod0, local, self.params)
    }

    /// `σ` where `ξ = 0`, when `ξ` does not depend on `t`.
    fn xi_zero_sigma(&self) -> Option<f64> {
        if self.e2.1 != 0.0 || self.e1.1 == 0.0 {
            return None;
        }
        Some(-(self.offset.1 + self.base.1) / self.e1.1)
    }
}

fn weight(frame: &Frame, local: Point, s: f64, b: f64) -> f64 {
    let xi = frame.xi(local);
    if xi == 0.0 {
        return 0.0;
    }
    let mut w = bracket(xi).powf(2.0 * s);
    if b != 0.0 {
        w *= bracket(frame.modulation(local)).powf(2.0 * b);
    }
    w
}

/// Norm of the indicator of `P` with the default phase.
pub fn indicator_norm(p: &Parallelogram, spec: NormSpec) -> Result<f64> {
    indicator_norm_with(p, spec, PhaseParams::default())
}

/// Norm of `1_P` by quadrature over the affine parameterization of `P`
/// (`X^{s,b}`, `H^s`) or over `τ`-chord lengths (`Y`).
pub fn indicator_norm_with(p: &Parallelogram, spec: NormSpec, params: PhaseParams) -> Result<f64> {
    let frame = Frame::new(p.origin_offset(), p.local_vertices()[0], p.e1(), p.e2(), params);
    match spec.variant {
        NormVariant::Xsb | NormVariant::Hs => {
            let b = if spec.variant == NormVariant::Hs { 0.0 } else { spec.b };
            let zero = frame.xi_zero_sigma();
            let f = |sg: f64, t: f64| weight(&frame, frame.local(sg, t), spec.s, b);
            Ok((frame.det * refine(|lv| frame_quadrature(1.0, &[], zero, lv, &f))?).sqrt())
        }
        NormVariant::Y => y_norm(p, spec.s),
        NormVariant::Xsb1 | NormVariant::Xmod => Err(LabError::Unsupported(format!(
            "{spec} is not available for indicator fields"
        ))),
    }
}

/// `τ`-length of the slice `{ξ = c} ∩ P` (local coordinates).
fn chord(verts: &[Point; 4], c: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..4 {
        let (a, b) = (verts[i], verts[(i + 1) % 4]);
        if (a.1 - c) * (b.1 - c) <= 0.0 {
            let tau = if a.1 == b.1 {
                lo = lo.min(a.0.min(b.0));
                hi = hi.max(a.0.max(b.0));
                continue;
            } else {
                a.0 + (c - a.1) / (b.1 - a.1) * (b.0 - a.0)
            };
            lo = lo.min(tau);
            hi = hi.max(tau);
        }
    }
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

fn y_norm(p: &Parallelogram, s: f64) -> Result<f64> {
    let v = p.local_vertices();
    let xo = p.origin_offset().1;
    let mut cuts: Vec<f64> = v.iter().map(|q| q.1).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.len() < 2 {
        return Err(LabError::Invariant("parallelogram has no xi extent".into()));
    }
    let gl = GaussLegendre::new(GL_ORDER);
    let val = refine(|lv| {
        cuts.windows(2)
            .flat_map(|w| gl.graded(w[0], w[1], lv))
            .map(|(x, wt)| {
                let l = chord(&v, x);
                wt * bracket(xo + x).powf(2.0 * s) * l * l
            })
            .sum()
    })?;
    Ok(val.sqrt())
}

/// `‖ξ·(1_P * 1_Q)‖_{X^{s,b}}` for translates `P`, `Q`, integrating the
/// exact tent profile over the Minkowski sum.
pub fn convolution_output_norm(p: &Parallelogram, q: &Parallelogram, s: f64, b: f64, params: PhaseParams) -> Result<f64> {
    if !p.is_translate_of(q) {
        return Err(LabError::Unsupported(
            "output norms need the second parallelogram to be a translate of the first".into(),
        ));
    }
    let po = p.origin_offset();
    let qo = q.origin_offset();
    let offset = (po.0 + qo.0, po.1 + qo.1);
    let (pv, qv) = (p.local_vertices()[0], q.local_vertices()[0]);
    let frame = Frame::new(offset, (pv.0 + qv.0, pv.1 + qv.1), p.e1(), p.e2(), params);
    let tent = |x: f64| (1.0 - (x - 1.0).abs()).max(0.0);
    let zero = frame.xi_zero_sigma();
    let f = |sg: f64, t: f64| {
        let local = frame.local(sg, t);
        let xi = frame.xi(local);
        let h = tent(sg) * tent(t);
        xi * xi * h * h * weight(&frame, local, s, b)
    };
    let det = frame.det;
    Ok((det * det * det * refine(|lv| frame_quadrature(2.0, &[1.0], zero, lv, &f))?).sqrt())
}

/// Norms of one counterexample at one `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleRow {
    pub n: f64,
    pub u_norm: f64,
    pub v_norm: f64,
    pub output_norm: f64,
    pub ratio: f64,
}

/// Scaling of `‖∂_x(uv)‖_{X^{-3/4,b-1}} / (‖u‖_{X^{-3/4,b}} ‖v‖_{X^{-3/4,b}})`
/// in `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub example: u8,
    pub b: f64,
    pub rows: Vec<ExampleRow>,
    pub u_fit: Option<SlopeFit>,
    pub v_fit: Option<SlopeFit>,
    pub output_fit: Option<SlopeFit>,
    pub ratio_fit: Option<SlopeFit>,
    /// Slopes implied by the stated size laws of `‖u‖`, `‖v‖` and the output.
    pub stated_u_slope: f64,
    pub stated_v_slope: f64,
    pub stated_output_slope: f64,
    pub stated_ratio_slope: f64,
}

impl ExampleReport {
    fn fit(rows: &[ExampleRow], f: impl Fn(&ExampleRow) -> f64) -> Option<SlopeFit> {
        let xs: Vec<f64> = rows.iter().map(|r| r.n).collect();
        let ys: Vec<f64> = rows.iter().map(f).collect();
        fit_log2_slope(&xs, &ys)
    }

    pub fn probe_report(&self) -> ProbeReport {
        let rows = self
            .rows
            .iter()
            .map(|r| ScaleRow::from_ratios(r.n, &[r.ratio]))
            .collect();
        ProbeReport::new(format!("example{}", self.example), 0, rows)
            .with_meta("b", self.b)
            .with_meta("rows", &self.rows)
            .with_meta("u_fit", self.u_fit)
            .with_meta("v_fit", self.v_fit)
            .with_meta("output_fit", self.output_fit)
            .with_meta("stated_ratio_slope", self.stated_ratio_slope)
    }
}

fn check_ns(ns: &[f64]) -> Result<()> {
    if ns.len() < 3 || ns.iter().any(|&n| !(n >= 64.0)) {
        return Err(LabError::param("N_list", "need at least three values, all >= 64"));
    }
    Ok(())
}

fn run_example(
    example: u8,
    ns: &[f64],
    b: f64,
    partner: impl Fn(&Parallelogram) -> Parallelogram,
    stated: (f64, f64, f64),
) -> Result<ExampleReport> {
    check_ns(ns)?;
    let params = PhaseParams::default();
    let rows = ns
        .iter()
        .map(|&n| {
            let u = counterexample_rect(n)?;
            let v = partner(&u);
            let u_norm = indicator_norm_with(&u, NormSpec::xsb(-0.75, b), params)?;
            let v_norm = indicator_norm_with(&v, NormSpec::xsb(-0.75, b), params)?;
            let output_norm = convolution_output_norm(&u, &v, -0.75, b - 1.0, params)?;
            Ok(ExampleRow {
                n,
                u_norm,
                v_norm,
                output_norm,
                ratio: output_norm / (u_norm * v_norm),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExampleReport {
        example,
        b,
        u_fit: ExampleReport::fit(&rows, |r| r.u_norm),
        v_fit: ExampleReport::fit(&rows, |r| r.v_norm),
        output_fit: ExampleReport::fit(&rows, |r| r.output_norm),
        ratio_fit: ExampleReport::fit(&rows, |r| r.ratio),
        stated_u_slope: stated.0,
        stated_v_slope: stated.1,
        stated_output_slope: stated.2,
        stated_ratio_slope: stated.2 - stated.0 - stated.1,
        rows,
    })
}

/// High × high → low: `u = 1_Rec`, `v(τ, ξ) = u(−τ, −ξ)`, for `b > 1/2`.
pub fn example1_experiment(ns: &[f64], b: f64) -> Result<ExampleReport> {
    if !(b > 0.5 && b <= 1.0) {
        return Err(LabError::param("b", format!("must lie in (1/2, 1], got {b}")));
    }
    run_example(1, ns, b, |u| u.reflected(), (-1.0, -1.0, (6.0 * b - 11.0) / 4.0))
}

/// High × low → high: `u = 1_Rec`, `v = 1_{R_0}`, for `b < 1/2`.
///
/// The stated output law is `N^{1/2}`; the computed output decays like
/// `N^{-1/2}`, consistent with the pointwise lower bound `N^{-1/2} 1_Rec` for
/// the product transform.
pub fn example2_experiment(ns: &[f64], b: f64) -> Result<ExampleReport> {
    if !(0.0..0.5).contains(&b) {
        return Err(LabError::param("b", format!("must lie in [0, 1/2), got {b}")));
    }
    run_example(2, ns, b, |u| u.centered(), (-1.0, (6.0 * b - 1.0) / 4.0, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::geometry::indicator_convolution_value;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rect_vertices_and_closure() {
        let r = counterexample_rect(64.0).unwrap();
        let v = r.vertices();
        assert_eq!(v[0], (262144.0, 64.0));
        assert!((v[1].0 - 262656.0).abs() < 1e-9 && (v[1].1 - (64.0 + 1.0 / 24.0)).abs() < 1e-12);
        let l = r.local_vertices();
        let res = ((l[0].0 + l[2].0) - (l[1].0 + l[3].0), (l[0].1 + l[2].1) - (l[1].1 + l[3].1));
        assert_eq!(res, (0.0, 0.0));
        // v3 is ((N + a)³, N + a)
        let a = 64f64.powf(-0.5) / 3.0;
        let v3 = (Dd::new(64.0) + Dd::new(a)).cube();
        assert!(((v3 - Dd::new(262144.0)).to_f64() - l[2].0).abs() < 1e-9);
        assert!(counterexample_rect(63.0).is_err());
    }

    #[test]
    fn rect_area_law_and_band() {
        let r = counterexample_rect(1024.0).unwrap();
        assert!((r.area() * 32.0 * 9.0 - 1.0).abs() < 0.05);
        let p = PhaseParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m0 = offset_modulation(r.origin_offset(), p);
        for _ in 0..2000 {
            let loc = r.local_point(rng.random(), rng.random());
            let m = modulation_local(r.origin_offset(), m0, loc, p);
            assert!(m.abs() < 1.0, "{m}");
        }
    }

    #[test]
    fn l2_norm_is_root_area() {
        let r = counterexample_rect(256.0).unwrap();
        let n = indicator_norm(&r, NormSpec::xsb(0.0, 0.0)).unwrap();
        assert!((n / r.area().sqrt() - 1.0).abs() < 1e-10);
        let sq = Parallelogram::new((0.0, 2.0), [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]).unwrap();
        let y = indicator_norm(&sq, NormSpec::y()).unwrap();
        // chord 2 on ξ ∈ [2, 3]
        let gl = GaussLegendre::new(20);
        let want: f64 = gl.mapped(2.0, 3.0).map(|(x, w)| w * 4.0 * bracket(x).powf(-1.5)).sum();
        assert!((y - want.sqrt()).abs() < 1e-8);
        assert!(matches!(indicator_norm(&sq, NormSpec::xmod()), Err(LabError::Unsupported(_))));
    }

    #[test]
    fn reflection_overlap_is_area() {
        let r = counterexample_rect(512.0).unwrap();
        let v = indicator_convolution_value(&r, &r.reflected(), (0.0, 0.0));
        // edge vectors of the reflection carry roundoff of the long side
        assert!((v / r.area() - 1.0).abs() < 1e-9);
        let clipped = crate::bilinear::geometry::indicator_convolution_clipped(&r, &r.reflected(), (0.0, 0.0));
        assert!((clipped / r.area() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_converges() {
        let r = counterexample_rect(128.0).unwrap();
        let f = Frame::new(r.origin_offset(), r.local_vertices()[0], r.e1(), r.e2(), PhaseParams::default());
        let g = |s: f64, t: f64| weight(&f, f.local(s, t), -0.75, 0.7);
        let a = frame_quadrature(1.0, &[], None, 16, &g);
        let b = frame_quadrature(1.0, &[], None, 32, &g);
        assert!((a / b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn output_norm_decreases_with_b() {
        let p = PhaseParams::default();
        let u = counterexample_rect(128.0).unwrap();
        let v = u.reflected();
        let hi = convolution_output_norm(&u, &v, -0.75, 0.0, p).unwrap();
        let lo = convolution_output_norm(&u, &v, -0.75, -0.3, p).unwrap();
        assert!(lo < hi);
    }

    #[test]
    fn asymptotic_slopes() {
        let ns: Vec<f64> = (14..=18).map(|k| 2f64.powi(k)).collect();
        let e1 = example1_experiment(&ns, 0.6).unwrap();
        assert!((e1.ratio_fit.unwrap().slope - 0.15).abs() < 0.01);
        assert!((e1.output_fit.unwrap().slope - e1.stated_output_slope).abs() < 0.01);
        let e2 = example2_experiment(&ns, 0.4).unwrap();
        assert!((e2.v_fit.unwrap().slope - 0.35).abs() < 0.01);
        // the product lower bound gives N^{-1/2}, so the ratio grows like N^{(3-6b)/4}
        assert!((e2.output_fit.unwrap().slope + 0.5).abs() < 0.01);
        assert!((e2.ratio_fit.unwrap().slope - 0.15).abs() < 0.01);
        assert!(example1_experiment(&ns, 0.5).is_err());
        assert!(example2_experiment(&ns, 0.5).is_err());
    }

    #[test]
    fn example1_bounded_window() {
        let ns: Vec<f64> = (6..=10).map(|k| 2f64.powi(k)).collect();
        let r = example1_experiment(&ns, 1.0).unwrap();
        assert!((r.ratio_fit.unwrap().slope - 0.75).abs() < 0.05);
        assert!((r.u_fit.unwrap().slope + 1.0).abs() < 0.05);
        let scaled: Vec<f64> = r.rows.iter().map(|row| row.u_norm * row.n).collect();
        let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.1);
    }
}
