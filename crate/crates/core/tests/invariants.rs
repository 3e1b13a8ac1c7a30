use num_complex::Complex64;
use proptest::prelude::*;

use ostrovsky_lab::bilinear::{
    convolve, example1_experiment, indicator_convolution_clipped, intersection_area, lemma31_case, lemma31_matches,
    polygon_area, Lemma31Case, Parallelogram,
};
use ostrovsky_lab::bourgain::{SpacetimeField, TauLattice};
use ostrovsky_lab::runner::{parse_config_text, ExperimentConfig, ParamSpec};
use ostrovsky_lab::solver::{nonlinearity, rescale_initial, step_if_rk4, Dealias, CRITICAL_INDEX};
use ostrovsky_lab::spectral::{free_evolution, PhaseParams, SpaceGrid, SpectralState};

fn lattice_field(cells: &[(usize, usize, f64, f64)]) -> SpacetimeField {
    let tau = TauLattice::new(16, 0.5).unwrap();
    let xi = SpaceGrid::with_frequency_spacing(16, 0.25).unwrap();
    let mut f = SpacetimeField::zeros(tau, xi, PhaseParams::default());
    for &(l, k, re, im) in cells {
        f.set(l, k, Complex64::new(re, im));
    }
    f
}

fn cells() -> impl Strategy<Value = Vec<(usize, usize, f64, f64)>> {
    prop::collection::vec((0..16usize, 0..16usize, -1.0..1.0f64, -1.0..1.0f64), 1..12)
}

fn real_state(n: usize, period: f64, amps: &[(f64, f64)]) -> SpectralState {
    let grid = SpaceGrid::new(n, period).unwrap();
    let mut u = SpectralState::zeros(grid);
    for (k, &(re, im)) in amps.iter().enumerate().take(n / 2 - 1) {
        let k = k as i64 + 1;
        u.coeffs_mut()[grid.slot(k).unwrap()] = Complex64::new(re, im);
        u.coeffs_mut()[grid.slot(-k).unwrap()] = Complex64::new(re, -im);
    }
    u
}

fn parallelogram() -> impl Strategy<Value = Parallelogram> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.2..2.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.2..2.0f64).prop_map(
        |(ox, oy, a, b, c, d)| {
            let (e1, e2) = ((a, b), (c, d + 0.0));
            let e2 = if (e1.0 * e2.1 - e1.1 * e2.0).abs() < 0.1 { (c, d + 1.0) } else { e2 };
            Parallelogram::new(
                (ox, oy),
                [(0.0, 0.0), e1, (e1.0 + e2.0, e1.1 + e2.1), e2],
            )
            .unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_commutes_and_respects_supports(a in cells(), b in cells()) {
        let (f, g) = (lattice_field(&a), lattice_field(&b));
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        let mass = |h: &SpacetimeField| h.values().iter().map(|v| v.norm()).sum::<f64>();
        let scale = mass(&f) * mass(&g) * f.cell_area();
        for (x, y) in fg.values().iter().zip(gf.values()) {
            prop_assert!((x - y).norm() <= 1e-12 * scale);
        }
        for (l, k, _, _, v) in fg.cells() {
            let reachable = a.iter().any(|&(l1, k1, ..)| {
                b.iter().any(|&(l2, k2, ..)| l1 + l2 == l + 8 && k1 + k2 == k + 8)
            });
            if !reachable {
                prop_assert!(v.norm() <= 1e-12 * scale, "({l},{k}) = {v}");
            }
        }
    }

    #[test]
    fn clipping_is_symmetric(p in parallelogram(), q in parallelogram()) {
        let pq = intersection_area(&p, &q);
        let qp = intersection_area(&q, &p);
        prop_assert!((pq - qp).abs() <= 1e-12 * p.area().max(q.area()));
        prop_assert!((intersection_area(&p, &p) - p.area()).abs() <= 1e-12 * p.area());
        prop_assert!(pq <= p.area().min(q.area()) * (1.0 + 1e-12));
        prop_assert!((polygon_area(&p.vertices()).abs() - p.area()).abs() <= 1e-12 * p.area());
    }

    #[test]
    fn indicator_convolution_bounded(p in parallelogram(), q in parallelogram(), z in (-6.0..6.0f64, -6.0..6.0f64)) {
        let v = indicator_convolution_clipped(&p, &q, z);
        prop_assert!(v >= 0.0 && v <= p.area().min(q.area()) * (1.0 + 1e-12));
    }

    #[test]
    fn case_assignment_is_total(j in 0u32..60, j1 in 0u32..60, j2 in 0u32..60) {
        let matches = lemma31_matches(j, j1, j2);
        let assigned = lemma31_case(j, j1, j2);
        match matches.first() {
            Some(first) => prop_assert_eq!(assigned.case, *first),
            None => prop_assert_eq!(assigned.case, Lemma31Case::Unclassified),
        }
        // the only overlap of the stated conditions is (ii)/(v) at j1 - j = 10
        if matches.len() > 1 {
            prop_assert_eq!(matches, vec![Lemma31Case::II, Lemma31Case::V]);
        }
    }

    #[test]
    fn nonlinearity_is_mean_zero_and_real(amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..15)) {
        let u = real_state(32, 40.0, &amps);
        for d in [Dealias::TwoThirds, Dealias::None] {
            let out = nonlinearity(&u, d).unwrap();
            prop_assert!(out.is_mean_zero());
            prop_assert!(out.is_hermitian(1e-12));
        }
        let next = step_if_rk4(&u, 1e-2, PhaseParams::default(), Dealias::TwoThirds).unwrap();
        prop_assert!(next.is_mean_zero());
    }

    #[test]
    fn linear_flow_reverses(amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..31), t in -1.0..1.0f64, gamma in 0.0..2.0f64) {
        let u = real_state(64, 60.0, &amps);
        let p = PhaseParams::with_gamma(gamma).unwrap();
        let back = free_evolution(&free_evolution(&u, t, p), -t, p);
        prop_assert!(back.hs_distance(&u, 0.0).unwrap() <= 1e-12 * u.l2_norm().max(1e-300));
    }

    #[test]
    fn rescaling_obeys_the_critical_bound(amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..31), lambda in 1.0..64.0f64) {
        let u = real_state(64, 30.0, &amps);
        let v = rescale_initial(&u, lambda).unwrap();
        prop_assert!(v.is_mean_zero());
        let bound = lambda.powf(CRITICAL_INDEX) * u.hs_norm(CRITICAL_INDEX);
        prop_assert!(v.hs_norm(CRITICAL_INDEX) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn config_text_round_trips(samples in 1usize..1_000_000, seed in any::<u64>()) {
        let specs = vec![ParamSpec::new("seed", 0, ""), ParamSpec::new("samples", 10, "")];
        let text = format!("seed = {seed}\nsamples={samples}\n");
        let cfg = ExperimentConfig::resolve("x", &specs, &parse_config_text(&text).unwrap(), &Default::default()).unwrap();
        let again = parse_config_text(&cfg.canonical_text()).unwrap();
        prop_assert_eq!(again.get("seed").unwrap(), &seed.to_string());
        prop_assert_eq!(cfg.get::<usize>("samples").unwrap(), samples);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn example1_output_decreases_with_b(k in 6i32..11, b_lo in 0.55..0.75f64, gap in 0.05..0.25f64) {
        let n = [2f64.powi(k), 2f64.powi(k + 1), 2f64.powi(k + 2)];
        let lo = example1_experiment(&n, b_lo).unwrap();
        let hi = example1_experiment(&n, (b_lo + gap).min(1.0)).unwrap();
        for (a, b) in lo.rows.iter().zip(&hi.rows) {
            prop_assert!(a.output_norm < b.output_norm);
        }
    }
}
