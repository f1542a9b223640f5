//! Acceptance gate: one PASS/FAIL line per criterion. Expected values come
//! from closed forms or brute-force solves written out here, not from the
//! library routines under test.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use bernsim_cli::{run_study, ExperimentConfig};
use bernsim_core::bernstein::{apply_polynomial, longrun_limit, BernsteinOperator, GridFunction};
use bernsim_core::fleming_viot::{
    fv_moment_oracle, DimensionSchedule, Discretization, MomentFunctional,
};
use bernsim_core::generator::{hoeffding_tail_bound, voronovskaya_residual_polynomial};
use bernsim_core::moments::{
    central_moment_binomial, moment_bound_certify, skorski_envelope_check,
};
use bernsim_core::mutation::{
    q3_deviation, uniform_mutation, MutationModel, MutationRates, MutationSchedule,
    UniformMutationLimit,
};
use bernsim_core::semigroup::{exact_tt, semigroup_error, IterationRoute};
use bernsim_core::simplex::{
    random_simplex_points, sample_multinomial_into, simplex_grid, Lattice,
};
use bernsim_core::stats::loglog_fit;
use bernsim_core::{Polynomial, RngStream, SimplexPoint};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn slope(ns: &[f64], ys: &[f64]) -> f64 {
    loglog_fit(ns, ys).map(|f| f.slope).unwrap_or(f64::NAN)
}

fn study(text: &str) -> bernsim_cli::StudyOutput {
    let cfg = ExperimentConfig::parse(text).expect("acceptance config parses");
    run_study(&cfg).expect("study runs")
}

/// Rows of a CSV table as header-keyed maps.
fn rows(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split(','))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn col(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

// ---------- 1. quadratic exactness ----------

/// `f = x^T C x + b^T x` with `C` symmetric.
struct Quadratic {
    d: usize,
    c: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    fn polynomial(&self) -> Polynomial {
        let d = self.d;
        let mut p = Polynomial::zero(d);
        for i in 0..d {
            for j in 0..d {
                let mut e = vec![0u32; d];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, self.c[i * d + j]);
            }
            let mut e = vec![0u32; d];
            e[i] = 1;
            p.add_term(e, self.b[i]);
        }
        p
    }

    /// `(1/2) sum_ij x_i (delta_ij - x_j) 2 C_ij`.
    fn generator(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut v = 0.0;
        for i in 0..d {
            v += x[i] * self.c[i * d + i];
            for j in 0..d {
                v -= x[i] * x[j] * self.c[i * d + j];
            }
        }
        v
    }
}

fn quadratics(d: usize) -> Vec<Quadratic> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut c = vec![0.0; d * d];
            c[i * d + j] += 0.5;
            c[j * d + i] += 0.5;
            out.push(Quadratic {
                d,
                c,
                b: vec![0.0; d],
            });
        }
        let mut b = vec![0.0; d];
        b[i] = 1.0;
        out.push(Quadratic {
            d,
            c: vec![0.0; d * d],
            b,
        });
    }
    let mut rng = RngStream::new(99, d as u64);
    for _ in 0..3 {
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v: f64 = rng.random_range(-2.0..2.0);
                c[i * d + j] = v;
                c[j * d + i] = v;
            }
        }
        let b = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        out.push(Quadratic { d, c, b });
    }
    out
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    for d in 2..=4 {
        let pts = random_simplex_points(d, 100, 7 + d as u64);
        let qs = quadratics(d);
        let polys: Vec<Polynomial> = qs.iter().map(Quadratic::polynomial).collect();
        for n in 5..=200u32 {
            for (q, p) in qs.iter().zip(&polys) {
                let bp = apply_polynomial(p, n, None).unwrap();
                for x in &pts {
                    let x = x.coords();
                    let lhs = n as f64 * (bp.eval(x) - p.eval(x));
                    worst = worst.max((lhs - q.generator(x)).abs());
                    cases += 1;
                }
            }
        }
        // full lattice sums at a spread of n
        for n in [5u32, 10, 25, 50, 100, 200] {
            let op = BernsteinOperator::new(d, n, None).unwrap();
            let grids: Vec<GridFunction> = polys.iter().map(|p| op.restrict(p).unwrap()).collect();
            for x in &pts {
                let w = op.weights(x).unwrap();
                for ((q, p), g) in qs.iter().zip(&polys).zip(&grids) {
                    let lhs = n as f64 * (g.dot(&w) - p.eval(x.coords()));
                    worst = worst.max((lhs - q.generator(x.coords())).abs());
                    cases += 1;
                }
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{cases} cases, max |n(Bf-f) - Af| = {worst:.2e} (tol 1e-9)"),
    )
}

// ---------- 2. Voronovskaya bound ----------

fn criterion_2() -> Outcome {
    let ns = [20u32, 40, 80, 160, 320];
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut ok = true;
    let mut details = Vec::new();
    // (d, exponents, max Lipschitz constant of the second partials)
    for (d, e, lip) in [(2usize, vec![3u32, 0], 6.0), (3, vec![2, 1, 0], 2.0)] {
        let f = Polynomial::monomial(d, e, 1.0);
        let grid = simplex_grid(d, 40).unwrap();
        let prefactor = (d as f64).powf(2.5) / (16.0 * 3f64.powf(0.25));
        let mut res = Vec::new();
        for &n in &ns {
            let r = voronovskaya_residual_polynomial(&f, n, &grid, None, None)
                .unwrap()
                .residual;
            let bound = prefactor * lip / (n as f64).sqrt();
            ok &= r <= bound;
            if d == 2 {
                // n(B - I) x^3 - A x^3 = x(1-x)(1-2x)/n exactly
                let exact = grid
                    .iter()
                    .map(|x| {
                        let t = x.coords()[0];
                        (t * (1.0 - t) * (1.0 - 2.0 * t)).abs() / n as f64
                    })
                    .fold(0.0, f64::max);
                ok &= (r - exact).abs() <= 1e-9 * exact.max(1e-300);
            }
            res.push(r);
        }
        let s = slope(&nf, &res);
        ok &= s <= -0.45;
        details.push(format!(
            "d={d}: slope {s:.3}, worst ratio {:.3}",
            res[0] / (prefactor * lip / 20f64.sqrt())
        ));
    }
    outcome(ok, details.join("; "))
}

// ---------- 3. semigroup rate ----------

fn criterion_3() -> Outcome {
    let f = Polynomial::monomial(2, vec![2, 0], 1.0);
    let grid = simplex_grid(2, 50).unwrap();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for t in [0.25, 1.0] {
        for n in [25u32, 50, 100] {
            let err =
                semigroup_error(&f, n, t, None, None, &grid, IterationRoute::Lattice).unwrap();
            // B^k f = x - (x - x^2)(1 - 1/n)^k and T_t f = x - (x - x^2) e^{-t}
            let k = (n as f64 * t).floor() as i32;
            let gap = ((1.0 - 1.0 / n as f64).powi(k) - (-t).exp()).abs();
            let exact = grid
                .iter()
                .map(|x| {
                    let v = x.coords()[0];
                    (v - v * v) * gap
                })
                .fold(0.0, f64::max);
            let bound = (t / (n as f64).sqrt() + 1.0 / n as f64) * 0.25;
            ok &= err <= bound && (err - exact).abs() <= 1e-12;
            worst_ratio = worst_ratio.max(err / bound);
        }
    }
    outcome(
        ok,
        format!("max error/bound = {worst_ratio:.3}, errors match the closed form"),
    )
}

// ---------- 4. mutation version ----------

type Terms = BTreeMap<Vec<u32>, f64>;

/// The mutated generator on one sparse polynomial, term by term.
fn generator_terms(p: &Terms, q: &MutationRates) -> Terms {
    let d = q.dim();
    let mut out = Terms::new();
    let mut add = |e: Vec<u32>, v: f64| *out.entry(e).or_insert(0.0) += v;
    for (a, &c) in p {
        let total: u32 = a.iter().sum();
        if total >= 2 {
            add(a.clone(), -0.5 * (total * (total - 1)) as f64 * c);
        }
        for i in 0..d {
            if a[i] >= 2 {
                let mut e = a.clone();
                e[i] -= 1;
                add(e, 0.5 * (a[i] * (a[i] - 1)) as f64 * c);
            }
            if a[i] >= 1 {
                for j in 0..d {
                    let mut e = a.clone();
                    e[i] -= 1;
                    e[j] += 1;
                    add(e, q.get(j, i) * a[i] as f64 * c);
                }
            }
        }
    }
    out
}

/// `T_t f` by the exponential series of the generator.
fn taylor_semigroup(f: &Polynomial, q: &MutationRates, t: f64) -> Terms {
    let mut term: Terms = f.terms().map(|(e, c)| (e.to_vec(), c)).collect();
    let mut sum = term.clone();
    for k in 1..400 {
        term = generator_terms(&term, q)
            .into_iter()
            .map(|(e, c)| (e, c * t / k as f64))
            .collect();
        let size: f64 = term.values().map(|c| c.abs()).sum();
        for (e, c) in &term {
            *sum.entry(e.clone()).or_insert(0.0) += c;
        }
        if size < 1e-18 {
            break;
        }
    }
    sum
}

fn eval_terms(p: &Terms, x: &[f64]) -> f64 {
    p.iter()
        .map(|(e, c)| {
            c * e
                .iter()
                .zip(x)
                .map(|(&k, v)| v.powi(k as i32))
                .product::<f64>()
        })
        .sum()
}

fn criterion_4() -> Outcome {
    let d = 3;
    let theta = 1.0;
    let q = uniform_mutation(1, d, theta).unwrap();
    let f = Polynomial::monomial(d, vec![2, 1, 0], 1.0);
    let grid = simplex_grid(d, 20).unwrap();
    let ns = [20u32, 40, 80, 160, 320];
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut res = Vec::new();
    let mut errs = Vec::new();
    for &n in &ns {
        let qn = q.scaled(1.0 / n as f64);
        res.push(
            voronovskaya_residual_polynomial(&f, n, &grid, Some(&qn), Some(&q))
                .unwrap()
                .residual,
        );
        errs.push(
            semigroup_error(
                &f,
                n,
                1.0,
                Some(&qn),
                Some(&q),
                &grid,
                IterationRoute::Polynomial,
            )
            .unwrap(),
        );
    }
    let tt = exact_tt(&f, 1.0, Some(&q)).unwrap();
    let series = taylor_semigroup(&f, &q, 1.0);
    let oracle_gap = grid
        .iter()
        .map(|x| (tt.eval(x.coords()) - eval_terms(&series, x.coords())).abs())
        .fold(0.0, f64::max);
    let (sr, se) = (slope(&nf, &res), slope(&nf, &errs));
    outcome(
        sr <= -0.45 && se <= -0.45 && oracle_gap <= 1e-10,
        format!("residual slope {sr:.3}, semigroup slope {se:.3}, T_t vs series oracle {oracle_gap:.1e}"),
    )
}

// ---------- 5. long-run absorption ----------

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn pmf(from: &[u32], to: &[u32], n: u32) -> f64 {
    let mut v = factorial(n);
    for (&a, &b) in from.iter().zip(to) {
        let p = a as f64 / n as f64;
        v *= p.powi(b as i32) / factorial(b);
    }
    v
}

fn criterion_5() -> Outcome {
    let d = 3;
    let mut worst_interp: f64 = 0.0;
    let mut worst_solve: f64 = 0.0;
    for n in 4..=10u32 {
        let lattice = Lattice::new(d, n).unwrap();
        let len = lattice.len();
        let mut rng = RngStream::new(2024, n as u64);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = GridFunction::new(d, n, values.clone()).unwrap();
        let limit = longrun_limit(&g, &SimplexPoint::barycenter(d), 1e-14, 1_000_000).unwrap();

        let states: Vec<Vec<u32>> = (0..len).map(|i| lattice.state(i).to_vec()).collect();
        let absorbing: Vec<bool> = states.iter().map(|s| s.contains(&n)).collect();
        let vertex_value = |i: usize| {
            let idx = states.iter().position(|s| s[i] == n).unwrap();
            values[idx]
        };
        // brute force: (I - P_TT) h_T = P_TA f_A
        let transient: Vec<usize> = (0..len).filter(|&i| !absorbing[i]).collect();
        let m = transient.len();
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (r, &i) in transient.iter().enumerate() {
            for j in 0..len {
                let p = pmf(&states[i], &states[j], n);
                if absorbing[j] {
                    rhs[r] += p * values[j];
                } else {
                    let c = transient.iter().position(|&t| t == j).unwrap();
                    a[(r, c)] -= p;
                }
            }
        }
        let h_t = a.lu().solve(&rhs).unwrap();
        let mut h = values.clone();
        for (r, &i) in transient.iter().enumerate() {
            h[i] = h_t[r];
        }
        let got = limit.grid.values();
        for i in 0..len {
            let interp: f64 = (0..d)
                .map(|k| states[i][k] as f64 / n as f64 * vertex_value(k))
                .sum();
            worst_interp = worst_interp.max((got[i] - interp).abs());
            worst_solve = worst_solve.max((got[i] - h[i]).abs());
        }
    }
    outcome(
        worst_interp <= 1e-8 && worst_solve <= 1e-8,
        format!("max |B^k f - sum x_i f(e_i)| = {worst_interp:.1e}, vs absorbing solve {worst_solve:.1e}"),
    )
}

// ---------- 6. martingale ----------

const MARTINGALE: &str = r#"
[experiment]
kind = "martingale"
seed = 606

[space]
d = 3
point = [0.2, 0.3, 0.5]

[sweep]
n = [50]

[mutation]
model = "MODEL"
theta = 2.0

[method]
paths = 1000
steps = 100
"#;

fn criterion_6() -> Outcome {
    let x = [0.2, 0.3, 0.5];
    let (n, d, theta) = (50.0, 3.0, 2.0);
    let mut ok = true;
    let mut max_z: f64 = 0.0;
    let mut details = Vec::new();
    for model in ["none", "uniform"] {
        let out = study(&MARTINGALE.replace("MODEL", model));
        let transitions = out.summary["transitions"].as_u64().unwrap();
        ok &= transitions >= 100_000;
        for r in rows(&out.tables[0].text) {
            let k: usize = r["coordinate"].parse::<usize>().unwrap() - 1;
            let expected = match (model, r["kind"].as_str()) {
                ("uniform", "one-step") => {
                    theta / (2.0 * n * (d - 1.0)) * (1.0 - x[k]) - theta / (2.0 * n) * x[k]
                }
                _ => 0.0,
            };
            let se = col(&r, "stderr");
            let z = (col(&r, "mean") - expected) / se;
            ok &= z.abs() <= 4.0 && (col(&r, "expected") - expected).abs() <= 1e-15;
            max_z = max_z.max(z.abs());
        }
        details.push(format!("{model}: {transitions} transitions"));
    }
    outcome(
        ok,
        format!("{}; max |z| = {max_z:.2} (limit 4)", details.join(", ")),
    )
}

// ---------- 7. Hölder / moment scaling ----------

fn criterion_7() -> Outcome {
    let out = study(
        r#"
[experiment]
kind = "holder"
seed = 707

[space]
d = 3

[sweep]
n = [100]
beta = [1, 2]

[method]
paths = 2000
"#,
    );
    let xs: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let ns: Vec<u64> = (1..=400).collect();
    let mut ok = true;
    let mut details = Vec::new();
    for beta in [1u32, 2] {
        let s = out.summary[&format!("slope[n=100,beta={beta}]")]
            .as_f64()
            .unwrap();
        let c = out.summary[&format!("constant[n=100,beta={beta}]")]
            .as_f64()
            .unwrap();
        let certified = moment_bound_certify(beta, &ns, &xs).constant;
        let cap = 3f64.powi(beta as i32) * certified;
        ok &= s >= beta as f64 - 0.1 && c <= cap;
        details.push(format!(
            "beta={beta}: slope {s:.3}, C {c:.3} <= d^beta C(beta) = {cap:.3}"
        ));
    }
    outcome(ok, details.join("; "))
}

// ---------- 8. measure-valued Voronovskaya ----------

fn fv_config(schedule: &str, ns: &str, functional: &str) -> String {
    format!(
        r#"
[experiment]
kind = "fv-voronovskaya"
seed = 808

[space]
schedule = "{schedule}"
grid = 12

[sweep]
n = {ns}

[function]
functional = "{functional}"
gamma = "2*z - z^2"

[mutation]
model = "uniform"
theta = 1.0
"#
    )
}

fn gamma(z: f64) -> f64 {
    2.0 * z - z * z
}

/// Uniform-mutation deviation on `{i/d}` for `gamma`, whose integral is 2/3.
fn uniform_deviation(d: usize, theta: f64) -> f64 {
    let z = |i: usize| (i + 1) as f64 / d as f64;
    (0..d)
        .map(|i| {
            let discrete: f64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| gamma(z(j)) - gamma(z(i)))
                .sum::<f64>()
                * theta
                / (2.0 * (d - 1) as f64);
            let continuum = theta / 2.0 * (2.0 / 3.0 - gamma(z(i)));
            (discrete - continuum).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let sweeps = [
        ("root:9", "[512, 19683]"),
        ("fixed:2", "[8, 16, 32, 64, 128, 512]"),
        ("fixed:3", "[8, 16, 32, 64, 128, 512]"),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (schedule, ns) in sweeps {
        let out = study(&fv_config(schedule, ns, "variance"));
        let res: Vec<f64> = rows(&out.tables[0].text)
            .iter()
            .map(|r| col(r, "residual"))
            .collect();
        let dec = res.windows(2).all(|w| w[1] < w[0]);
        ok &= dec;
        details.push(format!("{schedule} decreasing={dec}"));
    }
    // N = 1: the residual is the mutation deviation itself
    let mut gap: f64 = 0.0;
    let sched = MutationSchedule::new(
        MutationModel::Uniform { theta: 1.0 },
        DimensionSchedule::Root { k: 9 },
    );
    let limit = UniformMutationLimit { theta: 1.0 };
    for (schedule, ns) in sweeps {
        let out = study(&fv_config(schedule, ns, "linear"));
        for r in rows(&out.tables[0].text) {
            let d = col(&r, "d_n") as usize;
            let residual = col(&r, "residual");
            gap = gap.max((residual - uniform_deviation(d, 1.0)).abs());
            if schedule == "root:9" {
                let n = col(&r, "n") as u64;
                let measured = q3_deviation(&sched, &limit, &gamma, n, 0).unwrap();
                gap = gap.max((residual - measured).abs());
            }
        }
    }
    ok &= gap <= 1e-10;
    details.push(format!("N=1 |residual - deviation| = {gap:.1e}"));
    outcome(ok, details.join(", "))
}

// ---------- 9. measure-valued semigroup ----------

fn fv_semigroup_config(model: &str, functional: &str) -> String {
    format!(
        r#"
[experiment]
kind = "fv-semigroup"
seed = 909

[space]
d = 3
grid = 12

[sweep]
n = [50, 100, 200]
t = [0.5]

[function]
functional = "{functional}"

[mutation]
model = "{model}"

[method]
route = "polynomial"
"#
    )
}

fn criterion_9() -> Outcome {
    let errors = |text: &str| -> Vec<f64> { rows(text).iter().map(|r| col(r, "error")).collect() };
    let main = errors(&study(&fv_semigroup_config("uniform", "variance")).tables[0].text);
    let dec = main.windows(2).all(|w| w[1] < w[0]);
    let linear = errors(&study(&fv_semigroup_config("none", "linear")).tables[0].text);
    let lin_max = linear.iter().copied().fold(0.0, f64::max);
    // without mutation, E[sum_ij beta_ij X_i X_j] = e^{-t} sum_ij beta_ij x_i x_j when beta_ii = 0
    let phi = MomentFunctional::variance(|z| z);
    let beta = phi.discretize(&Discretization::unit_interval(3)).unwrap();
    let oracle = fv_moment_oracle(&beta, 0.5, None).unwrap();
    let mut gap: f64 = 0.0;
    for x in simplex_grid(3, 12).unwrap() {
        let c = x.coords();
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let (zi, zj) = ((i + 1) as f64 / 3.0, (j + 1) as f64 / 3.0);
                quad += (zi - zj).powi(2) / 2.0 * c[i] * c[j];
            }
        }
        gap = gap.max((oracle.eval(&x) - (-0.5f64).exp() * quad).abs());
    }
    outcome(
        dec && lin_max <= 1e-10 && gap <= 1e-12,
        format!(
            "errors {:.2e} > {:.2e} > {:.2e}; N=1 q=0 max {lin_max:.1e}; oracle vs closed form {gap:.1e}",
            main[0], main[1], main[2]
        ),
    )
}

// ---------- 10. binomial moments ----------

fn criterion_10() -> Outcome {
    let xs: Vec<f64> = (1..=19)
        .map(|i| i as f64 / 20.0)
        .chain([0.01, 0.99, 0.333])
        .collect();
    let mut worst: f64 = 0.0;
    for n in 1..=1000u64 {
        for &x in &xs {
            let nf = n as f64;
            let closed = nf
                * x
                * (1.0 - x)
                * (1.0 - 6.0 * x + 6.0 * x * x + 3.0 * nf * x - 3.0 * nf * x * x);
            let got = central_moment_binomial(n, x, 4);
            worst = worst.max((got - closed).abs() / closed.abs());
        }
    }
    let fine: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let ns: Vec<u64> = (1..=1000).collect();
    let c2 = moment_bound_certify(2, &ns, &fine).constant;
    let band_ns: Vec<u64> = (4..=12).map(|k| 1u64 << k).collect();
    let band_xs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let mut band = (f64::INFINITY, 0.0f64);
    let mut band_ok = true;
    for beta in 2..=5 {
        let r = skorski_envelope_check(beta, &band_ns, &band_xs);
        band_ok &= r.pass && r.min > 0.0 && r.max.is_finite();
        band = (band.0.min(r.min), band.1.max(r.max));
    }
    outcome(
        worst <= 1e-10 && c2 <= 3.0 / 16.0 + 1e-12 && band_ok,
        format!(
            "4th moment rel err {worst:.1e}; C(2) = {c2:.6} <= 3/16; Skorski ratios in [{:.3}, {:.3}]",
            band.0, band.1
        ),
    )
}

// ---------- 11. Hoeffding tails ----------

fn criterion_11() -> Outcome {
    let (d, n, delta) = (3usize, 50u32, 0.3f64);
    let bound = 2.0 * d as f64 * (-(n as f64) * delta.powi(4) / (2.0 * (d * d) as f64)).exp();
    let mut ok = (bound - hoeffding_tail_bound(n as u64, d, delta)).abs() <= 1e-15;
    let mut details = Vec::new();
    for (s, x) in [[1.0 / 3.0; 3], [0.2, 0.3, 0.5], [0.05, 0.05, 0.9]]
        .iter()
        .enumerate()
    {
        let mut rng = RngStream::new(1111, s as u64);
        let mut counts = vec![0u32; d];
        let samples = 1_000_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            sample_multinomial_into(x, n, &mut rng, &mut counts);
            let dist: f64 = counts
                .iter()
                .zip(x)
                .map(|(&k, v)| (k as f64 / n as f64 - v).powi(2))
                .sum::<f64>()
                .sqrt();
            hits += (dist >= delta) as usize;
        }
        let p = hits as f64 / samples as f64;
        ok &= p <= bound;
        details.push(format!("{p:.2e}"));
    }
    outcome(
        ok,
        format!(
            "empirical tails [{}] <= bound {bound:.3}",
            details.join(", ")
        ),
    )
}

// ---------- 12. determinism ----------

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cli(config: &Path, out: &Path, threads: usize) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bernsim"))
        .arg("run")
        .arg(config)
        .arg("--output")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_12() -> Outcome {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    configs.sort();
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = !configs.is_empty();
    let mut compared = 0;
    for cfg in &configs {
        let stem = cfg.file_stem().unwrap().to_string_lossy().to_string();
        let a = tmp.path().join(format!("{stem}-a"));
        let b = tmp.path().join(format!("{stem}-b"));
        if !(run_cli(cfg, &a, 1) && run_cli(cfg, &b, 4)) {
            ok = false;
            continue;
        }
        for entry in std::fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            let left = std::fs::read(a.join(&name)).unwrap();
            let right = std::fs::read(b.join(&name)).unwrap_or_default();
            ok &= left == right;
            compared += 1;
        }
    }
    outcome(
        ok,
        format!(
            "{} studies, {compared} files byte-identical across 1 and 4 threads",
            configs.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "quadratic exactness", criterion_1, 60),
        (2, "Voronovskaya bound", criterion_2, 300),
        (3, "semigroup rate", criterion_3, 600),
        (4, "mutation version", criterion_4, 900),
        (5, "long-iterate absorption", criterion_5, 60),
        (6, "martingale increments", criterion_6, 60),
        (7, "Holder/moment scaling", criterion_7, 300),
        (8, "measure-valued Voronovskaya", criterion_8, 60),
        (9, "measure-valued semigroup", criterion_9, 600),
        (10, "binomial moments", criterion_10, 120),
        (11, "Hoeffding tails", criterion_11, 60),
        (12, "determinism", criterion_12, 600),
    ];
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.1}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 12 acceptance criteria passed");
}
