use std::fs::File;

use serde_json::json;

use super::output::Outputs;
use super::params::{ExperimentConfig, ParamSpec};
use super::RunError;
use crate::bilinear::{
    example1_experiment, example2_experiment, make_trial_field, probe_convolution_lemma_default, ConvLemma,
    DyadicSupportSpec, Lemma31Case, Lemma31Probe, LhsTarget, ProbeLattice, ProbeReport, SignPattern,
};
use crate::bourgain::{norm, probe_embedding_29, NormSpec};
use crate::resonance::{gamma_sequence, identity_suite, GAMMA_SUM_BOUND};
use crate::solver::{
    builtin_data, fixed_point_residual, kdv_limit_experiment, kdv_limit_grid_check, lipschitz_sweep, load_csv,
    scaling_check, solve, solve_picard, BuiltinData, Scheme, SolverConfig, CRITICAL_INDEX,
};
use crate::spectral::{PhaseParams, SpaceGrid, SpectralState, DEFAULT_DOMAIN_LENGTH};

/// What a run reports besides its files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    /// Set when a numerical divergence was detected.
    pub divergence: Option<String>,
}

impl Outcome {
    fn line(mut self, s: impl Into<String>) -> Self {
        self.lines.push(s.into());
        self
    }
}

type RunFn = fn(&ExperimentConfig, &mut Outputs) -> Result<Outcome, RunError>;

/// A subcommand of the runner.
pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    params: fn() -> Vec<ParamSpec>,
    run: RunFn,
}

impl Experiment {
    /// Parameter table, `seed` first.
    pub fn params(&self) -> Vec<ParamSpec> {
        let mut v = vec![ParamSpec::new("seed", 0, "master random seed")];
        v.extend((self.params)());
        v
    }

    pub(crate) fn execute(&self, cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
        (self.run)(cfg, out)
    }
}

pub fn catalog() -> &'static [Experiment] {
    &CATALOG
}

static CATALOG: [Experiment; 11] = [
    Experiment {
        name: "identities",
        about: "algebraic identities and the resonance sandwich on random frequencies",
        params: || vec![ParamSpec::new("samples", 100_000, "number of random frequency samples")],
        run: run_identities,
    },
    Experiment {
        name: "gamma-seq",
        about: "the gamma_n = 2 log2 gamma_{n-1} recursion and its sum bound",
        params: || {
            vec![
                ParamSpec::new("j-min", 16, "smallest j (>= 16)"),
                ParamSpec::new("j-max", 1 << 20, "largest j; j doubles from j-min"),
            ]
        },
        run: run_gamma_seq,
    },
    Experiment {
        name: "norms",
        about: "Bourgain-type norms of a random field on one dyadic shell",
        params: || {
            vec![
                ParamSpec::new("m", 64, "tau lattice points"),
                ParamSpec::new("n", 64, "xi lattice points"),
                ParamSpec::new("tau-extent", 200, "half-width of the tau window"),
                ParamSpec::new("xi-extent", 8, "half-width of the xi window"),
                ParamSpec::new("j", 2, "dyadic xi shell"),
                ParamSpec::new("k-max", 20, "largest modulation shell"),
                ParamSpec::new("sign", "any", "xi sign: same (+), opposite (-), any"),
                ParamSpec::new("s", -0.75, "Sobolev index"),
                ParamSpec::new("b", 0.6, "modulation index"),
                ParamSpec::new("p", 1.5, "tau exponent of the mixed norm"),
            ]
        },
        run: run_norms,
    },
    Experiment {
        name: "probe-conv",
        about: "random-field probe of one convolution lemma across scales",
        params: || {
            vec![
                ParamSpec::new("lemma", "L21a", "L21a, L21b, L22a, ..., L26"),
                ParamSpec::new("scales", "2..4", "scale exponents"),
                ParamSpec::new("samples", 10, "samples per scale"),
                ParamSpec::new("grid", 128, "lattice points per axis"),
            ]
        },
        run: run_probe_conv,
    },
    Experiment {
        name: "probe-bilinear",
        about: "random-field probe of one dyadic bilinear case across j",
        params: || {
            vec![
                ParamSpec::new("case", "ii", "case label i..viii"),
                ParamSpec::new("j-list", "2..6", "output shells j"),
                ParamSpec::new("samples", 30, "samples per j"),
                ParamSpec::new("grid", 256, "lattice points per axis"),
                ParamSpec::new("target", "xmod", "norm of the output: xmod or y"),
            ]
        },
        run: run_probe_bilinear,
    },
    Experiment {
        name: "counterexample",
        about: "exact-geometry scaling of the two bilinear counterexamples",
        params: || {
            vec![
                ParamSpec::new("example", 1, "1 (b > 1/2) or 2 (b < 1/2)"),
                ParamSpec::new("b", 0.6, "modulation index"),
                ParamSpec::new("n-list", "64,128,256,512,1024", "values of N"),
            ]
        },
        run: run_counterexample,
    },
    Experiment {
        name: "solve",
        about: "integrate the equation and export the trajectory",
        params: || solver_specs(1.0, 1e-3, 0.5, "if_rk4", true),
        run: run_solve,
    },
    Experiment {
        name: "picard",
        about: "Picard iteration of the Duhamel map with contraction diagnostics",
        params: || {
            let mut v = solver_specs(0.1, 1e-3, 0.1, "picard", false);
            v.push(ParamSpec::new("cross-check", true, "compare with an IF-RK4 run"));
            v
        },
        run: run_picard,
    },
    Experiment {
        name: "kdv-limit",
        about: "distance to the KdV solution as the rotation strength shrinks",
        params: || {
            let mut v = solver_specs(1.0, 1e-3, 0.5, "if_rk4", false);
            v.retain(|p| p.key != "gamma");
            v.push(ParamSpec::new("gammas", "0.1,0.01,0.001", "decreasing rotation strengths"));
            v.push(ParamSpec::new("grid-check", true, "repeat at twice the resolution"));
            v
        },
        run: run_kdv_limit,
    },
    Experiment {
        name: "scaling-check",
        about: "critical-norm decay of the rescaled data lambda^-2 u0(x/lambda)",
        params: || {
            vec![
                ParamSpec::new("data", "gaussian,sech2,random-band", "built-in data sets"),
                ParamSpec::new("amplitude", 1.0, "data amplitude"),
                ParamSpec::new("n", 256, "grid points"),
                ParamSpec::new("period", DEFAULT_DOMAIN_LENGTH, "domain length"),
                ParamSpec::new("lambdas", "1,2,4,8,16,32,64", "scaling factors"),
            ]
        },
        run: run_scaling_check,
    },
    Experiment {
        name: "lipschitz",
        about: "difference quotient of the data-to-solution map",
        params: || {
            let mut v = solver_specs(0.5, 1e-3, 0.2, "if_rk4", false);
            v.push(ParamSpec::new("direction", "random-band", "built-in perturbation direction"));
            v.push(ParamSpec::new("deltas", "1e-2,1e-3,1e-4", "perturbation sizes"));
            v
        },
        run: run_lipschitz,
    },
];

fn solver_specs(t: f64, dt: f64, amplitude: f64, scheme: &str, with_stride: bool) -> Vec<ParamSpec> {
    let mut v = vec![
        ParamSpec::new("data", "gaussian", "built-in initial data: gaussian, sech2, random-band"),
        ParamSpec::new("data-file", "", "CSV of x,u samples; overrides data, n and period"),
        ParamSpec::new("amplitude", amplitude, "peak amplitude of the built-in data"),
        ParamSpec::new("n", 256, "grid points"),
        ParamSpec::new("period", DEFAULT_DOMAIN_LENGTH, "domain length"),
        ParamSpec::new("dt", dt, "time step"),
        ParamSpec::new("T", t, "final time (<= 1)"),
        ParamSpec::new("beta", -1.0, "dispersion coefficient (< 0)"),
        ParamSpec::new("gamma", 1.0, "rotation strength (>= 0)"),
        ParamSpec::new("scheme", scheme, "picard or if_rk4"),
        ParamSpec::new("dealias", "two_thirds", "two_thirds or none"),
        ParamSpec::new("picard-iters", 50, "maximum Picard iterations"),
    ];
    if with_stride {
        v.push(ParamSpec::new("stride", 100, "export every stride-th state"));
    }
    v
}

fn initial_data(cfg: &ExperimentConfig, key: &str) -> Result<SpectralState, RunError> {
    let file = cfg.get_str("data-file")?;
    if key == "data" && !file.is_empty() {
        let f = File::open(file).map_err(|e| RunError::Config(format!("data-file `{file}`: {e}")))?;
        return Ok(load_csv(f)?);
    }
    let kind: BuiltinData = cfg.get(key)?;
    let grid = SpaceGrid::new(cfg.get("n")?, cfg.get_f64("period")?)?;
    Ok(builtin_data(kind, grid, cfg.get_f64("amplitude")?, cfg.seed()?)?)
}

fn solver_config(cfg: &ExperimentConfig, grid: SpaceGrid) -> Result<SolverConfig, RunError> {
    let params = PhaseParams::new(
        cfg.get_f64("beta")?,
        if cfg.params.contains_key("gamma") { cfg.get_f64("gamma")? } else { 1.0 },
    )?;
    Ok(SolverConfig::new(grid, cfg.get_f64("dt")?, cfg.get_f64("T")?, params)?
        .with_scheme(cfg.get("scheme")?)
        .with_dealias(cfg.get("dealias")?)
        .with_picard_iters(cfg.get("picard-iters")?))
}

fn f(x: f64) -> String {
    x.to_string()
}

fn write_probe(out: &mut Outputs, report: &ProbeReport) -> Result<(), RunError> {
    out.csv("report.csv", |buf| report.write_csv(buf))?;
    out.json("report.json", &report.to_json())
}

fn run_identities(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let rep = identity_suite(cfg.get("samples")?, cfg.seed()?);
    let rows = vec![
        vec!["identity_a".into(), f(rep.max_residual_a)],
        vec!["identity_b".into(), f(rep.max_residual_b)],
        vec!["identity_2011".into(), f(rep.max_residual_2011)],
        vec!["identity_2044".into(), f(rep.max_residual_2044)],
        vec!["resonance_closed_form".into(), f(rep.max_residual_resonance)],
        vec!["sandwich_violations".into(), rep.sandwich_violations.to_string()],
        vec!["partition_violations".into(), rep.partition_violations.to_string()],
        vec!["window_violations".into(), rep.window_violations.to_string()],
    ];
    out.table("identities.csv", &["check", "value"], &rows)?;
    out.json("report.json", &rep)?;
    Ok(Outcome::default()
        .line(format!("max relative residual {:e} over {} samples", rep.max_residual(), rep.samples))
        .line(format!("sandwich violations {}", rep.sandwich_violations)))
}

fn run_gamma_seq(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let (lo, hi): (u64, u64) = (cfg.get("j-min")?, cfg.get("j-max")?);
    if lo < 16 || hi < lo {
        return Err(RunError::Config("`j-min` must be >= 16 and <= `j-max`".into()));
    }
    let mut rows = Vec::new();
    let mut seqs = Vec::new();
    let mut worst: f64 = 0.0;
    let mut j = lo;
    while j <= hi {
        let s = gamma_sequence(j)?;
        if s.terminal_in_range {
            worst = worst.max(s.sum);
        }
        rows.push(vec![
            j.to_string(),
            s.steps().to_string(),
            f(*s.gammas.last().unwrap()),
            s.terminal_in_range.to_string(),
            f(s.sum),
            (!s.terminal_in_range || s.sum <= GAMMA_SUM_BOUND).to_string(),
        ]);
        seqs.push(s);
        j = j.saturating_mul(2);
    }
    out.table("gamma_seq.csv", &["j", "steps", "gamma_terminal", "terminal_in_range", "sum", "bound_ok"], &rows)?;
    out.json("report.json", &json!({ "bound": GAMMA_SUM_BOUND, "sequences": seqs }))?;
    Ok(Outcome::default().line(format!("largest in-range sum {worst} (bound {GAMMA_SUM_BOUND})")))
}

fn run_norms(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let lattice = ProbeLattice::new(
        cfg.get("m")?,
        cfg.get("n")?,
        cfg.get_f64("tau-extent")?,
        cfg.get_f64("xi-extent")?,
        PhaseParams::default(),
    )?;
    let sign = match cfg.get_str("sign")?.to_ascii_lowercase().as_str() {
        "same" | "+" => SignPattern::Same,
        "opposite" | "-" => SignPattern::Opposite,
        "any" => SignPattern::Any,
        other => return Err(RunError::Config(format!("invalid value `{other}` for `sign`"))),
    };
    let spec = DyadicSupportSpec::new(cfg.get("j")?, cfg.get("k-max")?, sign);
    let field = make_trial_field(&spec, &lattice, cfg.seed()?)?;
    let (s, b) = (cfg.get_f64("s")?, cfg.get_f64("b")?);
    let specs = [
        NormSpec::xsb(s, b),
        NormSpec::xsb1(s, b),
        NormSpec::xmod(),
        NormSpec::y(),
        NormSpec::hs(s),
    ];
    let mut rows = Vec::new();
    for spec in specs {
        rows.push(vec![spec.to_string(), f(norm(&field, spec)?)]);
    }
    if b > 0.5 {
        let e = probe_embedding_29(&field, b, cfg.get_f64("p")?)?;
        rows.push(vec!["ratio_x_over_xsb".into(), f(e.x_over_xsb)]);
        rows.push(vec!["ratio_lp_over_x".into(), f(e.lp_over_x)]);
        rows.push(vec!["ratio_y_over_xsb1".into(), f(e.y_over_xsb1)]);
    }
    out.table("norms.csv", &["norm", "value"], &rows)?;
    Ok(Outcome::default().line(format!("{} norms written", rows.len())))
}

fn probe_outcome(report: &ProbeReport) -> Outcome {
    let mut o = Outcome::default().line(format!(
        "{}: growth factor {:.4} ({})",
        report.name,
        report.growth_factor(),
        if report.bounded(2.0) { "bounded" } else { "growing" }
    ));
    if !report.all_finite() {
        o.divergence = Some(format!("{}: non-finite ratio", report.name));
    }
    o
}

fn run_probe_conv(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let lemma: ConvLemma = cfg.get("lemma")?;
    let report = probe_convolution_lemma_default(
        lemma,
        &cfg.get_list::<u32>("scales")?,
        cfg.get("samples")?,
        cfg.seed()?,
        cfg.get("grid")?,
    )?;
    write_probe(out, &report)?;
    Ok(probe_outcome(&report))
}

fn run_probe_bilinear(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let case: Lemma31Case = cfg.get("case")?;
    let mut probe = Lemma31Probe::new(case, cfg.get_list("j-list")?, cfg.get("samples")?, cfg.seed()?);
    probe.grid = cfg.get("grid")?;
    probe.target = match cfg.get_str("target")?.to_ascii_lowercase().as_str() {
        "xmod" | "x" => LhsTarget::Xmod,
        "y" => LhsTarget::Y,
        other => return Err(RunError::Config(format!("invalid value `{other}` for `target`"))),
    };
    let report = probe.run()?;
    write_probe(out, &report)?;
    Ok(probe_outcome(&report))
}

fn run_counterexample(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let ns: Vec<f64> = cfg.get_list("n-list")?;
    let b = cfg.get_f64("b")?;
    let report = match cfg.get::<u8>("example")? {
        1 => example1_experiment(&ns, b)?,
        2 => example2_experiment(&ns, b)?,
        other => return Err(RunError::Config(format!("invalid value `{other}` for `example` (1 or 2)"))),
    };
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![f(r.n), f(r.u_norm), f(r.v_norm), f(r.output_norm), f(r.ratio)])
        .collect();
    out.table("counterexample.csv", &["n", "u_norm", "v_norm", "output_norm", "ratio"], &rows)?;
    out.json("report.json", &report)?;
    let slope = |fit: Option<crate::numerics::SlopeFit>| fit.map_or(f64::NAN, |f| f.slope);
    Ok(Outcome::default()
        .line(format!(
            "ratio slope {:.4} (stated {:.4})",
            slope(report.ratio_fit),
            report.stated_ratio_slope
        ))
        .line(format!(
            "u slope {:.4}, v slope {:.4}, output slope {:.4}",
            slope(report.u_fit),
            slope(report.v_fit),
            slope(report.output_fit)
        )))
}

fn config_echo(cfg: &ExperimentConfig, solver: &SolverConfig) -> serde_json::Value {
    json!({ "seed": cfg.params["seed"], "data": cfg.params["data"], "data_file": cfg.params["data-file"], "solver": solver })
}

fn run_solve(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let u0 = initial_data(cfg, "data")?;
    let solver = solver_config(cfg, *u0.grid())?;
    let traj = solve(&u0, &solver)?;
    let stride: usize = cfg.get("stride")?;
    out.csv("trajectory.csv", |buf| traj.write_csv(buf, stride))?;
    let summary = traj.summary();
    out.json(
        "summary.json",
        &json!({ "config": config_echo(cfg, &solver), "summary": summary, "diagnostic": traj.diagnostic }),
    )?;
    Ok(Outcome {
        lines: vec![format!(
            "{} states to t = {}, L2 drift {:e}",
            summary.stored_states, summary.final_time, summary.l2_drift
        )],
        divergence: traj.diagnostic.clone(),
    })
}

fn run_picard(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let u0 = initial_data(cfg, "data")?;
    let solver = solver_config(cfg, *u0.grid())?.with_scheme(Scheme::Picard);
    let (traj, diag) = solve_picard(&u0, &solver)?;
    let rows: Vec<Vec<String>> = diag
        .distances
        .iter()
        .enumerate()
        .map(|(n, d)| vec![n.to_string(), f(*d), diag.ratios.get(n).map_or(String::new(), |r| f(*r))])
        .collect();
    out.table("picard.csv", &["iteration", "distance", "ratio"], &rows)?;
    let residual = fixed_point_residual(&traj, &u0)?;
    let gap = if cfg.get::<bool>("cross-check")? {
        let rk = solve(&u0, &solver.with_scheme(Scheme::IfRk4))?;
        rk.check_blowup()?;
        Some(traj.sup_distance(&rk, CRITICAL_INDEX)?)
    } else {
        None
    };
    out.json(
        "summary.json",
        &json!({
            "config": config_echo(cfg, &solver),
            "diagnostics": diag,
            "fixed_point_residual": residual,
            "if_rk4_gap": gap,
        }),
    )?;
    let mut o = Outcome::default().line(format!(
        "{} iterations, converged {}, max ratio from n = 2: {:.4}, residual {:e}",
        diag.iterations,
        diag.converged,
        diag.max_ratio_from(2),
        residual
    ));
    if let Some(g) = gap {
        o = o.line(format!("sup-t H^-3/4 gap to IF-RK4 {g:e}"));
    }
    if diag.diverged {
        o.divergence = traj.diagnostic;
    }
    Ok(o)
}

fn run_kdv_limit(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let u0 = initial_data(cfg, "data")?;
    let solver = solver_config(cfg, *u0.grid())?;
    let gammas: Vec<f64> = cfg.get_list("gammas")?;
    let (coarse, fine) = if cfg.get::<bool>("grid-check")? {
        let (c, f) = kdv_limit_grid_check(&u0, &gammas, &solver)?;
        (c, Some(f))
    } else {
        (kdv_limit_experiment(&u0, &gammas, &solver)?, None)
    };
    let rows: Vec<Vec<String>> = coarse
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let fine_e = fine.as_ref().map(|fr| fr.rows[i].error);
            vec![
                f(r.gamma),
                f(r.error),
                fine_e.map_or(String::new(), f),
                fine_e.map_or(String::new(), |e| f((e - r.error).abs() / r.error.max(e).max(f64::MIN_POSITIVE))),
            ]
        })
        .collect();
    out.table("kdv_limit.csv", &["gamma", "error", "error_fine", "relative_change"], &rows)?;
    out.json(
        "summary.json",
        &json!({ "config": config_echo(cfg, &solver), "coarse": coarse, "fine": fine }),
    )?;
    let mut o = Outcome::default().line(format!("e(gamma) strictly decreasing: {}", coarse.strictly_decreasing()));
    if let Some(fr) = &fine {
        o = o.line(format!("largest change at double resolution {:.4}", coarse.max_relative_change(fr)));
    }
    Ok(o)
}

fn run_scaling_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let kinds: Vec<BuiltinData> = cfg.get_list("data")?;
    let lambdas: Vec<f64> = cfg.get_list("lambdas")?;
    let grid = SpaceGrid::new(cfg.get("n")?, cfg.get_f64("period")?)?;
    let mut rows = Vec::new();
    let mut all = true;
    for kind in kinds {
        let u0 = builtin_data(kind, grid, cfg.get_f64("amplitude")?, cfg.seed()?)?;
        for r in scaling_check(&u0, &lambdas)? {
            all &= r.holds();
            rows.push(vec![kind.to_string(), f(r.lambda), f(r.norm), f(r.bound), r.holds().to_string()]);
        }
    }
    out.table("scaling.csv", &["data", "lambda", "norm", "bound", "holds"], &rows)?;
    Ok(Outcome::default().line(format!("bound holds on every row: {all}")))
}

fn run_lipschitz(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome, RunError> {
    let u0 = initial_data(cfg, "data")?;
    let solver = solver_config(cfg, *u0.grid())?;
    let kind: BuiltinData = cfg.get("direction")?;
    let w = builtin_data(kind, *u0.grid(), 1.0, cfg.seed()?.wrapping_add(1))?;
    let rep = lipschitz_sweep(&u0, &w, &cfg.get_list("deltas")?, &solver)?;
    let rows: Vec<Vec<String>> = rep.rows.iter().map(|r| vec![f(r.delta), f(r.ratio)]).collect();
    out.table("lipschitz.csv", &["delta", "ratio"], &rows)?;
    out.json("summary.json", &json!({ "config": config_echo(cfg, &solver), "report": rep }))?;
    Ok(Outcome::default().line(format!("ratio variation across deltas {:.4}", rep.variation())))
}
