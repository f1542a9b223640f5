//! Study runners: each composes library operations into CSV tables plus a
//! small summary of fitted exponents and pass flags.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};

use bernsim_core::bernstein::{
    holder_statistic, increment_moment, interpolate_path, longrun_limit, sample_chain,
    vertex_interpolant, BernsteinOperator, ChainTrajectory, GridFunction,
};
use bernsim_core::fleming_viot::{
    fv_semigroup_error, vor_infinite_residual, DimensionSchedule, FvStudy, MomentFunctional,
};
use bernsim_core::generator::{voronovskaya_residual_polynomial, ResidualReport};
use bernsim_core::moments::{moment_bound_certify, skorski_envelope_check, MomentTable};
use bernsim_core::mutation::{
    check_q1, check_q2, check_q3, mutated_point, MutationModel, MutationOperator, MutationRates,
    MutationSchedule, OhtaKimuraBoundary, Q3Options,
};
use bernsim_core::semigroup::{semigroup_error, trotter_rate_bound, IterationRoute, RateRow};
use bernsim_core::simplex::{sample_multinomial, simplex_grid, Lattice};
use bernsim_core::stats::{loglog_fit, mean_and_stderr, quantile};
use bernsim_core::{Polynomial, RngStream, SimplexPoint};

use crate::config::{ExperimentConfig, StudyKind};
use crate::error::CliError;
use crate::expr;

/// One CSV file of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, Value>,
}

impl StudyOutput {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    fn table(&mut self, file: &str, text: String) {
        self.tables.push(Table {
            file: file.to_string(),
            text,
        });
    }

    fn note(&mut self, key: impl Into<String>, value: Value) {
        self.summary.insert(key.into(), value);
    }
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    match cfg.experiment.kind {
        StudyKind::Voronovskaya => voronovskaya(cfg),
        StudyKind::SemigroupRate => semigroup_rate(cfg),
        StudyKind::Longrun => longrun(cfg),
        StudyKind::Holder => holder(cfg),
        StudyKind::Martingale => martingale(cfg),
        StudyKind::FvVoronovskaya => fv_voronovskaya(cfg),
        StudyKind::FvSemigroup => fv_semigroup(cfg),
        StudyKind::Moments => moments(cfg),
        StudyKind::Assumptions => assumptions(cfg),
    }
}

/// `root:K`, `fixed:D` or `explicit:N=D;N=D`.
pub fn parse_schedule(s: &str) -> Result<DimensionSchedule, CliError> {
    let bad = |m: String| CliError::config("space.schedule", m);
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| bad(format!("`{s}` is not of the form kind:argument")))?;
    match kind.trim() {
        "root" => {
            let k: u32 = arg
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad root `{arg}`")))?;
            if k == 0 {
                return Err(bad("root must be positive".into()));
            }
            Ok(DimensionSchedule::Root { k })
        }
        "fixed" => {
            let d: usize = arg
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad dimension `{arg}`")))?;
            if d < 2 {
                return Err(bad("dimension must be at least 2".into()));
            }
            Ok(DimensionSchedule::Fixed(d))
        }
        "explicit" => {
            let mut pairs = Vec::new();
            for item in arg.split(';').filter(|p| !p.trim().is_empty()) {
                let (n, d) = item
                    .split_once('=')
                    .ok_or_else(|| bad(format!("`{item}` is not N=D")))?;
                let n: u64 = n
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad n in `{item}`")))?;
                let d: usize = d
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad d in `{item}`")))?;
                if d < 2 {
                    return Err(bad(format!("dimension below 2 in `{item}`")));
                }
                pairs.push((n, d));
            }
            if pairs.is_empty() {
                return Err(bad("explicit schedule is empty".into()));
            }
            Ok(DimensionSchedule::Explicit(pairs))
        }
        other => Err(bad(format!("unknown schedule kind `{other}`"))),
    }
}

fn dim(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    cfg.space
        .d
        .ok_or_else(|| CliError::config("space.d", "missing"))
}

fn schedule(cfg: &ExperimentConfig) -> Result<DimensionSchedule, CliError> {
    match (&cfg.space.schedule, cfg.space.d) {
        (Some(s), _) => parse_schedule(s),
        (None, Some(d)) => Ok(DimensionSchedule::Fixed(d)),
        (None, None) => Err(CliError::config("space.schedule", "missing")),
    }
}

fn model(cfg: &ExperimentConfig) -> MutationModel {
    let theta = cfg.mutation.theta;
    match cfg.mutation.model.as_str() {
        "uniform" => MutationModel::Uniform { theta },
        "ohta-kimura" => MutationModel::OhtaKimura {
            theta,
            boundary: match cfg.mutation.boundary.as_str() {
                "reflecting" => OhtaKimuraBoundary::Reflecting,
                "killing" => OhtaKimuraBoundary::Killing,
                _ => OhtaKimuraBoundary::Censored,
            },
        },
        _ => MutationModel::None,
    }
}

/// Limit matrix `q = lim n q_n` at fixed `d`; `None` without mutation.
fn limit_rates(model: &MutationModel, d: usize) -> Result<Option<MutationRates>, CliError> {
    if *model == MutationModel::None {
        return Ok(None);
    }
    Ok(Some(MutationRates::new_weak(d, model.limit_matrix(d)?)?))
}

fn n32(n: u64) -> Result<u32, CliError> {
    u32::try_from(n).map_err(|_| CliError::config("sweep.n", format!("n = {n} is too large")))
}

fn start_point(cfg: &ExperimentConfig, d: usize) -> Result<SimplexPoint, CliError> {
    match &cfg.space.point {
        Some(p) => Ok(SimplexPoint::new(p.clone())?),
        None => Ok(SimplexPoint::barycenter(d)),
    }
}

fn test_polynomial(cfg: &ExperimentConfig, d: usize) -> Result<Polynomial, CliError> {
    if let Some(p) = &cfg.function.polynomial {
        return expr::parse_polynomial(p, d)
            .map_err(|m| CliError::config("function.polynomial", m));
    }
    match &cfg.function.builtin {
        Some(b) => expr::builtin(b, d).ok_or_else(|| {
            CliError::config("function.builtin", format!("`{b}` is not a polynomial"))
        }),
        None => Err(CliError::config("function.polynomial", "missing")),
    }
}

fn functional(cfg: &ExperimentConfig) -> Result<MomentFunctional, CliError> {
    let gamma = match &cfg.function.gamma {
        Some(g) => expr::parse_univariate(g).map_err(|m| CliError::config("function.gamma", m))?,
        None => Polynomial::coordinate(1, 0),
    };
    let g = move |z: f64| gamma.eval(&[z]);
    Ok(
        match cfg.function.functional.as_deref().unwrap_or("variance") {
            "linear" => MomentFunctional::linear(g),
            "squared-mean" => MomentFunctional::squared_mean(g),
            _ => MomentFunctional::variance(g),
        },
    )
}

/// Stream index of path `p` within sweep entry `i`.
fn stream(i: usize, p: usize) -> u64 {
    ((i as u64) << 32) | p as u64
}

fn fitted_slope(ns: &[u64], ys: &[f64]) -> Value {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    num(loglog_fit(&xs, ys).map(|f| f.slope).unwrap_or(f64::NAN))
}

/// Finite floats as JSON numbers, the rest as null.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn strictly_decreasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] < w[0])
}

fn voronovskaya(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let f = test_polynomial(cfg, d)?;
    let grid = simplex_grid(d, cfg.space.grid)?;
    let model = model(cfg);
    let q = limit_rates(&model, d)?;
    let mut text = format!("{}\n", ResidualReport::CSV_HEADER);
    let mut residuals = Vec::new();
    let mut all_pass = true;
    for &n in &cfg.sweep.n {
        let qn = model.rates(n, d)?;
        let report = voronovskaya_residual_polynomial(&f, n32(n)?, &grid, qn.as_ref(), q.as_ref())?;
        text.push_str(&report.csv_row());
        text.push('\n');
        residuals.push(report.residual);
        all_pass &= report.pass;
    }
    let mut out = StudyOutput::new();
    out.table("voronovskaya.csv", text);
    out.note("fitted_exponent", fitted_slope(&cfg.sweep.n, &residuals));
    out.note("all_pass", json!(all_pass));
    Ok(out)
}

fn route(cfg: &ExperimentConfig, stream_seed: u64) -> IterationRoute {
    match cfg.method.route.as_str() {
        "polynomial" => IterationRoute::Polynomial,
        "monte-carlo" => IterationRoute::MonteCarlo {
            paths: cfg.method.paths,
            seed: stream_seed,
        },
        _ => IterationRoute::Lattice,
    }
}

fn semigroup_rate(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let f = test_polynomial(cfg, d)?;
    let grid = simplex_grid(d, cfg.space.grid)?;
    let model = model(cfg);
    let q = limit_rates(&model, d)?;
    let mut text = format!("{}\n", RateRow::CSV_HEADER);
    let mut out = StudyOutput::new();
    for (ti, &t) in cfg.sweep.t.iter().enumerate() {
        let mut errors = Vec::new();
        for (ni, &n) in cfg.sweep.n.iter().enumerate() {
            let nn = n32(n)?;
            let qn = model.rates(n, d)?;
            let seed = cfg.experiment.seed.wrapping_add(stream(ti, ni));
            let error =
                semigroup_error(&f, nn, t, qn.as_ref(), q.as_ref(), &grid, route(cfg, seed))?;
            let bound = trotter_rate_bound(&f, nn, t, q.as_ref(), &grid)?.value;
            text.push_str(
                &RateRow {
                    n: nn,
                    t,
                    error,
                    bound,
                }
                .csv_row(),
            );
            text.push('\n');
            errors.push(error);
        }
        out.note(
            format!("fitted_exponent[t={t}]"),
            fitted_slope(&cfg.sweep.n, &errors),
        );
        out.note(
            format!("strictly_decreasing[t={t}]"),
            json!(strictly_decreasing(&errors)),
        );
    }
    out.tables.insert(
        0,
        Table {
            file: "semigroup-rate.csv".into(),
            text,
        },
    );
    Ok(out)
}

fn longrun(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let x = start_point(cfg, d)?;
    let grid = simplex_grid(d, cfg.space.grid)?;
    let mut text =
        String::from("n,iterations,final_change,value,vertex_interpolant,sup_deviation\n");
    let mut worst: f64 = 0.0;
    for (i, &n) in cfg.sweep.n.iter().enumerate() {
        let nn = n32(n)?;
        let lattice = Lattice::new(d, nn)?;
        let g = if cfg.function.builtin.as_deref() == Some("random-grid")
            || cfg.function.polynomial.is_none() && cfg.function.builtin.is_none()
        {
            let mut rng = RngStream::new(cfg.experiment.seed, stream(i, 0));
            let values = (0..lattice.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            GridFunction::new(d, nn, values)?
        } else {
            GridFunction::from_function(&test_polynomial(cfg, d)?, &lattice)?
        };
        let limit = longrun_limit(&g, &x, cfg.method.tol, cfg.method.max_iterations)?;
        let op = BernsteinOperator::new(d, nn, None)?;
        let mut sup: f64 = 0.0;
        for y in &grid {
            sup = sup.max((op.apply_grid(&limit.grid, y)? - vertex_interpolant(&g, y)?).abs());
        }
        worst = worst.max(sup);
        text.push_str(&format!(
            "{n},{},{:e},{},{},{:e}\n",
            limit.iterations,
            limit.final_change,
            limit.value,
            vertex_interpolant(&g, &x)?,
            sup
        ));
    }
    let mut out = StudyOutput::new();
    out.table("longrun.csv", text);
    out.note("max_sup_deviation", num(worst));
    Ok(out)
}

fn chains(
    cfg: &ExperimentConfig,
    entry: usize,
    x: &SimplexPoint,
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
) -> Result<Vec<ChainTrajectory>, CliError> {
    let mut out = Vec::with_capacity(cfg.method.paths);
    for p in 0..cfg.method.paths {
        let mut rng = RngStream::new(cfg.experiment.seed, stream(entry, p));
        out.push(sample_chain(x, n, steps, qn, &mut rng)?);
    }
    Ok(out)
}

/// Dyadic gaps `1, 2, 4, ...` up to `n / 8`, where the increment moments are
/// still far from saturation.
pub fn dyadic_gaps(n: u32) -> Vec<usize> {
    let top = (n as usize / 8).max(1);
    std::iter::successors(Some(1usize), |g| Some(g * 2))
        .take_while(|&g| g <= top)
        .collect()
}

fn holder(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let x = start_point(cfg, d)?;
    let model = model(cfg);
    let alpha = cfg.sweep.alpha.unwrap_or(0.25);
    let betas = if cfg.sweep.beta.is_empty() {
        vec![1, 2]
    } else {
        cfg.sweep.beta.clone()
    };
    let mut holder_text = String::from("n,alpha,paths,mean,q50,q90,q99\n");
    let mut inc_text = String::from("n,gap,time_gap,beta,moment,stderr\n");
    let mut out = StudyOutput::new();
    for (i, &n) in cfg.sweep.n.iter().enumerate() {
        let nn = n32(n)?;
        let qn = model.rates(n, d)?;
        let trajs = chains(cfg, i, &x, nn, nn as usize, qn.as_ref())?;
        let stats = trajs
            .iter()
            .map(|t| Ok(holder_statistic(&interpolate_path(t, true)?, alpha)))
            .collect::<Result<Vec<f64>, CliError>>()?;
        let (mean, _) = mean_and_stderr(&stats);
        holder_text.push_str(&format!(
            "{n},{alpha},{},{},{},{},{}\n",
            trajs.len(),
            mean,
            quantile(&stats, 0.5),
            quantile(&stats, 0.9),
            quantile(&stats, 0.99)
        ));
        let gaps = dyadic_gaps(nn);
        for &beta in &betas {
            let mut times = Vec::new();
            let mut moments = Vec::new();
            for &gap in &gaps {
                let (m, se) = increment_moment(&trajs, gap, beta);
                let tg = gap as f64 / n as f64;
                inc_text.push_str(&format!("{n},{gap},{tg},{beta},{m:e},{se:e}\n"));
                times.push(tg);
                moments.push(m);
            }
            if let Some(fit) = loglog_fit(&times, &moments) {
                out.note(format!("slope[n={n},beta={beta}]"), num(fit.slope));
                out.note(
                    format!("constant[n={n},beta={beta}]"),
                    num(fit.intercept.exp()),
                );
            }
        }
    }
    out.table("holder.csv", holder_text);
    out.table("increments.csv", inc_text);
    Ok(out)
}

fn martingale(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let x = start_point(cfg, d)?;
    let model = model(cfg);
    let mut text = String::from("n,kind,coordinate,mean,expected,stderr,z\n");
    let mut max_z: f64 = 0.0;
    let mut transitions = 0usize;
    for (i, &n) in cfg.sweep.n.iter().enumerate() {
        let nn = n32(n)?;
        let qn = model.rates(n, d)?;
        let trajs = chains(cfg, i, &x, nn, cfg.method.steps, qn.as_ref())?;
        let target = match &qn {
            Some(q) => mutated_point(&x, q)?,
            None => x.clone(),
        };
        let drift: Vec<f64> = target
            .coords()
            .iter()
            .zip(x.coords())
            .map(|(a, b)| a - b)
            .collect();
        let mut compensated: Vec<Vec<f64>> = vec![Vec::new(); d];
        for t in &trajs {
            let inc = t.increments(true)?;
            for v in &inc {
                for (c, &vi) in compensated.iter_mut().zip(v) {
                    c.push(vi);
                }
            }
            transitions += inc.len();
        }
        // one-step transitions from x itself, as many as the chains made
        let draws = cfg.method.paths * cfg.method.steps;
        let mut first: Vec<Vec<f64>> = vec![Vec::with_capacity(draws); d];
        let mut rng = RngStream::new(cfg.experiment.seed, stream(i, cfg.method.paths));
        for _ in 0..draws {
            let k = sample_multinomial(&target, nn, &mut rng);
            for (c, (&ki, xi)) in first.iter_mut().zip(k.counts().iter().zip(x.coords())) {
                c.push(ki as f64 / n as f64 - xi);
            }
        }
        for (kind, samples, expected) in [
            ("compensated", &compensated, vec![0.0; d]),
            ("one-step", &first, drift),
        ] {
            for k in 0..d {
                let (mean, se) = mean_and_stderr(&samples[k]);
                let z = if se > 0.0 {
                    (mean - expected[k]) / se
                } else if mean == expected[k] {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_z = max_z.max(z.abs());
                text.push_str(&format!(
                    "{n},{kind},{},{mean:e},{:e},{se:e},{z}\n",
                    k + 1,
                    expected[k]
                ));
            }
        }
    }
    let mut out = StudyOutput::new();
    out.table("martingale.csv", text);
    out.note("max_abs_z", num(max_z));
    out.note("transitions", json!(transitions));
    Ok(out)
}

fn fv_voronovskaya(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let phi = functional(cfg)?;
    let sched = MutationSchedule::new(model(cfg), schedule(cfg)?);
    let m = cfg.space.grid;
    let limit_model = sched.model.clone();
    let limit = move |d: usize| -> bernsim_core::Result<Arc<dyn MutationOperator>> {
        limit_model.limit_operator(d)
    };
    let grid = move |d: usize| simplex_grid(d, m);
    let rows = cfg
        .sweep
        .n
        .iter()
        .map(|&n| vor_infinite_residual(&phi, n, &sched, &limit, &grid))
        .collect::<bernsim_core::Result<Vec<_>>>()?;
    let study = FvStudy::from_rows(rows);
    let mut out = StudyOutput::new();
    out.table("fv-voronovskaya.csv", study.to_csv());
    out.note("fitted_exponent", num(study.fitted_exponent));
    out.note("strictly_decreasing", json!(study.strictly_decreasing));
    Ok(out)
}

fn fv_semigroup(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let d = dim(cfg)?;
    let phi = functional(cfg)?;
    let model = model(cfg);
    let beta = phi.discretize(&model.grid(d)?)?;
    let q = match model {
        MutationModel::None => None,
        _ => Some(model.limit_matrix(d)?),
    };
    let grid = simplex_grid(d, cfg.space.grid)?;
    let route = match cfg.method.route.as_str() {
        "lattice" => IterationRoute::Lattice,
        "polynomial" => IterationRoute::Polynomial,
        other => {
            return Err(CliError::config(
                "method.route",
                format!("`{other}` is not available for this study"),
            ))
        }
    };
    let mut text = String::from("n,t,d,error\n");
    let mut out = StudyOutput::new();
    for &t in &cfg.sweep.t {
        let mut errors = Vec::new();
        for &n in &cfg.sweep.n {
            let qn = model.rates(n, d)?;
            let e = fv_semigroup_error(&beta, n32(n)?, t, qn.as_ref(), q.as_deref(), &grid, route)?;
            text.push_str(&format!("{n},{t},{d},{e:e}\n"));
            errors.push(e);
        }
        out.note(
            format!("fitted_exponent[t={t}]"),
            fitted_slope(&cfg.sweep.n, &errors),
        );
        out.note(
            format!("strictly_decreasing[t={t}]"),
            json!(strictly_decreasing(&errors)),
        );
        out.note(
            format!("max_error[t={t}]"),
            num(errors.iter().copied().fold(0.0, f64::max)),
        );
    }
    out.tables.insert(
        0,
        Table {
            file: "fv-semigroup.csv".into(),
            text,
        },
    );
    Ok(out)
}

fn moments(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let (ns, xs, betas) = (&cfg.sweep.n, &cfg.sweep.x, &cfg.sweep.beta);
    let table = MomentTable::build(ns, xs, betas);
    let mut constants = String::from("beta,constant,slope,stable\n");
    let mut skorski = String::from("beta,min,max,lower,upper,pass\n");
    let mut out = StudyOutput::new();
    for &beta in betas {
        let b = moment_bound_certify(beta, ns, xs);
        constants.push_str(&format!("{beta},{},{},{}\n", b.constant, b.slope, b.stable));
        out.note(format!("constant[beta={beta}]"), num(b.constant));
        if beta >= 2 {
            let r = skorski_envelope_check(beta, ns, xs);
            skorski.push_str(&format!(
                "{beta},{},{},{},{},{}\n",
                r.min, r.max, r.band.0, r.band.1, r.pass
            ));
            out.note(format!("skorski_pass[beta={beta}]"), json!(r.pass));
        }
    }
    out.table("moments.csv", table.to_csv());
    out.table("constants.csv", constants);
    out.table("skorski.csv", skorski);
    Ok(out)
}

fn assumptions(cfg: &ExperimentConfig) -> Result<StudyOutput, CliError> {
    let model = model(cfg);
    if model == MutationModel::None {
        return Err(CliError::config(
            "mutation.model",
            "the assumption checks need a mutation model",
        ));
    }
    let dims = schedule(cfg)?;
    let sched = MutationSchedule::new(model.clone(), dims.clone());
    let ns = &cfg.sweep.n;
    let c = cfg.mutation.constant.unwrap_or(cfg.mutation.theta);
    let per_dim = matches!(model, MutationModel::OhtaKimura { .. });
    let dims_a = dims.clone();
    let a = move |n: u64| {
        if per_dim {
            dims_a.dim(n) as f64 / n as f64
        } else {
            1.0 / n as f64
        }
    };
    let mut reports = vec![check_q2(&sched, &a, ns, c)?];
    let gamma = match &cfg.function.gamma {
        Some(g) => expr::parse_univariate(g).map_err(|m| CliError::config("function.gamma", m))?,
        None => Polynomial::monomial(1, vec![2], 1.0),
    };
    let beta = move |z: f64| gamma.eval(&[z]);
    let limit = model.limit_operator(2)?;
    reports.push(check_q3(
        &sched,
        limit.as_ref(),
        &beta,
        ns,
        Q3Options::default(),
    )?);
    if let DimensionSchedule::Fixed(d) = dims {
        if let Some(q) = limit_rates(&model, d)? {
            let rates = |n: u64| -> bernsim_core::Result<MutationRates> {
                Ok(model.rates(n, d)?.unwrap_or_else(|| MutationRates::zero(d)))
            };
            reports.insert(0, check_q1(&rates, &q, cfg.mutation.exponent, ns, c)?);
        }
    }
    let mut text = String::new();
    let mut out = StudyOutput::new();
    for (i, r) in reports.iter().enumerate() {
        let csv = r.to_csv();
        let body = if i == 0 {
            csv.as_str()
        } else {
            csv.split_once('\n').map(|s| s.1).unwrap_or("")
        };
        text.push_str(body);
        out.note(format!("pass[{}]", r.name), json!(r.pass));
        out.note(format!("statistic[{}]", r.name), num(r.statistic));
    }
    let check = dims.check(ns);
    out.note("schedule_exponent", num(check.fitted_exponent));
    out.note("schedule_pass", json!(check.pass));
    out.table("assumptions.csv", text);
    Ok(out)
}
