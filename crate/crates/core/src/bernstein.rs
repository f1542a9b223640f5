//! The Bernstein operator on the simplex, with and without mutation.
//!
//! Three evaluation routes are provided:
//! - exact lattice sums ([`BernsteinOperator`], [`apply`], [`iterate_grid`]),
//! - exact coefficient maps on polynomials ([`apply_polynomial`],
//!   [`iterate_polynomial`], [`apply_moment_exact`]) built from multinomial
//!   factorial moments,
//! - Monte Carlo over Wright-Fisher chains ([`iterate_mc`], [`sample_chain`]).

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fleming_viot::MomentTensor;
use crate::mutation::{mutate_into, MutationRates};
use crate::polynomial::Polynomial;
use crate::simplex::{
    ln_factorial_table, ln_multinomial, sample_multinomial_into, Lattice, LatticeIndex, RngStream,
    SimplexPoint, DEFAULT_LATTICE_CAP,
};
use crate::stats::{compensated_sum, mean_and_stderr, CompensatedSum};

/// Transition matrices up to this many entries are stored densely.
pub const DENSE_TRANSITION_LIMIT: usize = 1 << 24;

const PAR_THRESHOLD: usize = 1 << 14;

/// A real function on the simplex with optional derivatives.
///
/// Gradients are length `d`; Hessians are row-major `d x d`.
pub trait SimplexFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn hessian(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A closure-backed [`SimplexFunction`].
pub struct EvaluableFunction {
    d: usize,
    value: ScalarFn,
    gradient: Option<VectorFn>,
    hessian: Option<VectorFn>,
}

impl EvaluableFunction {
    pub fn new(d: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            d,
            value: Box::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Box::new(h));
        self
    }

    /// Spot-checks Hessian symmetry at `points`; a missing Hessian passes.
    pub fn check_hessian_symmetry(&self, points: &[SimplexPoint], tol: f64) -> Result<()> {
        let Some(h) = &self.hessian else {
            return Ok(());
        };
        let d = self.d;
        for x in points {
            let m = h(x.coords());
            if m.len() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    got: m.len(),
                });
            }
            for i in 0..d {
                for j in 0..i {
                    if (m[i * d + j] - m[j * d + i]).abs() > tol {
                        return Err(Error::InvalidArgument(format!(
                            "Hessian is not symmetric at {:?} (entry {i},{j})",
                            x.coords()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for EvaluableFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvaluableFunction")
            .field("d", &self.d)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl SimplexFunction for EvaluableFunction {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }
}

/// Values of a function on the lattice `{k/n : |k| = n}`, in lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    d: usize,
    n: u32,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(d: usize, n: u32, values: Vec<f64>) -> Result<Self> {
        let size = crate::simplex::lattice_size(d, n);
        if values.len() as u128 != size {
            return Err(Error::DimensionMismatch {
                expected: size as usize,
                got: values.len(),
            });
        }
        Ok(Self { d, n, values })
    }

    /// Restriction of `f` to the lattice.
    pub fn from_function(f: &dyn SimplexFunction, lattice: &Lattice) -> Result<Self> {
        if f.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: f.dim(),
            });
        }
        let values = (0..lattice.len())
            .into_par_iter()
            .map(|i| f.value(&lattice.point(i)))
            .collect();
        Ok(Self {
            d: lattice.dim(),
            n: lattice.n(),
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `sum_k w_k g_k` with compensated accumulation.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        compensated_sum(self.values.iter().zip(weights).map(|(v, w)| v * w))
    }

    /// CSV with columns `k_1..k_d,value`.
    pub fn to_csv(&self, lattice: &Lattice) -> String {
        let mut s = (1..=self.d)
            .map(|i| format!("k_{i}"))
            .collect::<Vec<_>>()
            .join(",");
        s.push_str(",value\n");
        for (i, v) in self.values.iter().enumerate() {
            for c in lattice.state(i) {
                s.push_str(&format!("{c},"));
            }
            s.push_str(&format!("{v:e}\n"));
        }
        s
    }

    /// Parses [`GridFunction::to_csv`] output; rows may come in any order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("grid CSV: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let d = header.split(',').count().saturating_sub(1);
        let mut rows = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(bad(format!("row `{line}` has {} fields", fields.len())));
            }
            let counts = fields[..d]
                .iter()
                .map(|f| {
                    f.parse::<u32>()
                        .map_err(|_| bad(format!("bad count `{f}`")))
                })
                .collect::<Result<Vec<u32>>>()?;
            let v: f64 = fields[d]
                .parse()
                .map_err(|_| bad(format!("bad value `{}`", fields[d])))?;
            rows.push((counts, v));
        }
        let n = rows
            .first()
            .map(|(c, _)| c.iter().sum::<u32>())
            .ok_or_else(|| bad("no rows".into()))?;
        let lattice = Lattice::new(d, n)?;
        let mut values = vec![f64::NAN; lattice.len()];
        for (counts, v) in rows {
            let idx = lattice
                .rank(&counts)
                .ok_or_else(|| bad(format!("{counts:?} is not on the lattice")))?;
            values[idx] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(bad("missing lattice states".into()));
        }
        Self::new(d, n, values)
    }
}

/// `B_{d,n}` or `B_{d,n}^{(q_n)}` on a fixed lattice.
#[derive(Debug, Clone)]
pub struct BernsteinOperator {
    lattice: Lattice,
    ln_fact: Vec<f64>,
    q: Option<MutationRates>,
}

impl BernsteinOperator {
    pub fn new(d: usize, n: u32, q: Option<MutationRates>) -> Result<Self> {
        Self::with_cap(d, n, q, DEFAULT_LATTICE_CAP)
    }

    pub fn with_cap(d: usize, n: u32, q: Option<MutationRates>, cap: u64) -> Result<Self> {
        if let Some(q) = &q {
            if q.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: q.dim(),
                });
            }
        }
        Ok(Self {
            lattice: Lattice::with_cap(d, n, cap)?,
            ln_fact: ln_factorial_table(n),
            q,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn n(&self) -> u32 {
        self.lattice.n()
    }

    pub fn rates(&self) -> Option<&MutationRates> {
        self.q.as_ref()
    }

    pub fn restrict(&self, f: &dyn SimplexFunction) -> Result<GridFunction> {
        GridFunction::from_function(f, &self.lattice)
    }

    /// The sampling frequency: `x`, or `x^{(q_n)}` when mutating.
    fn sampling_point(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.q {
            Some(q) => mutate_into(x, q, out),
            None => {
                out.copy_from_slice(x);
                Ok(())
            }
        }
    }

    fn weights_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; d];
        self.sampling_point(x, &mut y)?;
        let ln_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let n = self.n();
        let lattice = &self.lattice;
        let fill = |(i, w): (usize, &mut f64)| {
            *w = ln_multinomial(&self.ln_fact, n, &ln_y, lattice.state(i)).exp();
        };
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(fill);
        } else {
            out.iter_mut().enumerate().for_each(fill);
        }
        // the pmf sums to one; dividing out the rounding keeps constants exact
        let total = compensated_sum(out.iter().copied());
        if total != 1.0 {
            out.iter_mut().for_each(|w| *w /= total);
        }
        Ok(())
    }

    /// Multinomial weights `P(G = k)` of every lattice state at `x`.
    pub fn weights(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.lattice.len()];
        self.weights_into(x.coords(), &mut w)?;
        Ok(w)
    }

    fn check_grid(&self, g: &GridFunction) -> Result<()> {
        if g.d != self.dim() || g.n != self.n() {
            return Err(Error::InvalidArgument(format!(
                "grid function lives on (d={}, n={}), operator on (d={}, n={})",
                g.d,
                g.n,
                self.dim(),
                self.n()
            )));
        }
        Ok(())
    }

    pub fn apply_grid(&self, g: &GridFunction, x: &SimplexPoint) -> Result<f64> {
        self.check_grid(g)?;
        Ok(g.dot(&self.weights(x)?))
    }

    pub fn apply(&self, f: &dyn SimplexFunction, x: &SimplexPoint) -> Result<f64> {
        self.apply_grid(&self.restrict(f)?, x)
    }

    /// One transition: `(B g)(k/n)` at every lattice state.
    pub fn step(&self, g: &GridFunction) -> Result<GridFunction> {
        self.check_grid(g)?;
        let len = self.lattice.len();
        let values = (0..len)
            .into_par_iter()
            .map_init(
                || vec![0.0; len],
                |buf, i| {
                    self.weights_into(&self.lattice.point(i), buf)?;
                    Ok(g.dot(buf))
                },
            )
            .collect::<Result<Vec<f64>>>()?;
        Ok(GridFunction {
            d: g.d,
            n: g.n,
            values,
        })
    }

    /// Dense row-major transition matrix, `None` above [`DENSE_TRANSITION_LIMIT`].
    pub fn transition_matrix(&self) -> Result<Option<TransitionMatrix>> {
        let len = self.lattice.len();
        if len.saturating_mul(len) > DENSE_TRANSITION_LIMIT {
            return Ok(None);
        }
        let mut p = vec![0.0; len * len];
        p.par_chunks_mut(len)
            .enumerate()
            .try_for_each(|(i, row)| self.weights_into(&self.lattice.point(i), row))?;
        Ok(Some(TransitionMatrix { len, p }))
    }

    /// `B^steps g` on the whole lattice.
    pub fn power(&self, g: &GridFunction, steps: usize) -> Result<GridFunction> {
        self.check_grid(g)?;
        if steps == 0 {
            return Ok(g.clone());
        }
        let mut current = g.clone();
        match self.transition_matrix()? {
            Some(m) => {
                for _ in 0..steps {
                    current.values = m.apply(&current.values);
                }
            }
            None => {
                for _ in 0..steps {
                    current = self.step(&current)?;
                }
            }
        }
        Ok(current)
    }
}

/// A dense transition matrix on the lattice.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    len: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.len + to]
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let map = |row: &[f64]| compensated_sum(row.iter().zip(g).map(|(a, b)| a * b));
        if self.len >= 512 {
            self.p.par_chunks(self.len).map(map).collect()
        } else {
            self.p.chunks(self.len).map(map).collect()
        }
    }
}

/// `B f(x)` by an exact lattice sum.
pub fn apply(
    f: &dyn SimplexFunction,
    x: &SimplexPoint,
    n: u32,
    qn: Option<&MutationRates>,
) -> Result<f64> {
    BernsteinOperator::new(x.dim(), n, qn.cloned())?.apply(f, x)
}

/// `B g(x)` for a grid function.
pub fn apply_grid(g: &GridFunction, x: &SimplexPoint, qn: Option<&MutationRates>) -> Result<f64> {
    BernsteinOperator::new(g.d, g.n, qn.cloned())?.apply_grid(g, x)
}

/// `B^steps f(x)` by exact lattice iteration; `steps = 0` returns `f(x)`.
pub fn iterate(
    f: &dyn SimplexFunction,
    x: &SimplexPoint,
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
) -> Result<f64> {
    if steps == 0 {
        return Ok(f.value(x.coords()));
    }
    let op = BernsteinOperator::new(x.dim(), n, qn.cloned())?;
    let g = op.restrict(f)?;
    op.apply_grid(&op.power(&g, steps - 1)?, x)
}

/// `B^steps g(x)` for a grid function. With `steps = 0`, `x` must be a lattice point.
pub fn iterate_grid(
    g: &GridFunction,
    x: &SimplexPoint,
    steps: usize,
    qn: Option<&MutationRates>,
) -> Result<f64> {
    let op = BernsteinOperator::new(g.d, g.n, qn.cloned())?;
    if steps == 0 {
        let counts: Vec<u32> = x
            .coords()
            .iter()
            .map(|c| (c * g.n as f64).round() as u32)
            .collect();
        let on_lattice = x
            .coords()
            .iter()
            .zip(&counts)
            .all(|(c, &k)| (c * g.n as f64 - k as f64).abs() < 1e-9);
        return match op.lattice.rank(&counts) {
            Some(i) if on_lattice => Ok(g.values[i]),
            _ => Err(Error::InvalidArgument(
                "zero iterations of a grid function need a lattice point".into(),
            )),
        };
    }
    op.apply_grid(&op.power(g, steps - 1)?, x)
}

/// Stirling numbers of the second kind `S(a, r)` for `a, r <= max`.
pub(crate) fn stirling2_table(max: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; max + 1]; max + 1];
    s[0][0] = 1.0;
    for a in 1..=max {
        for r in 1..=a {
            s[a][r] = r as f64 * s[a - 1][r] + s[a - 1][r - 1];
        }
    }
    s
}

/// `n (n-1) ... (n-m+1)`.
pub(crate) fn falling_factorial(n: u32, m: u32) -> f64 {
    (0..m).map(|k| n as f64 - k as f64).product()
}

/// Calls `visit(r, coef)` for every `r <= a`, where
/// `E[prod_i (K_i / n)^{a_i}] = sum_r coef * prod_i y_i^{r_i}` for `K ~ Mult(n, y)`.
fn multinomial_moment_terms(
    a: &[u32],
    n: u32,
    s2: &[Vec<f64>],
    mut visit: impl FnMut(&[u32], f64),
) {
    let total: u32 = a.iter().sum();
    let scale = (n as f64).powi(-(total as i32));
    let mut r = vec![0u32; a.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pos: usize,
        a: &[u32],
        r: &mut [u32],
        stirling: f64,
        n: u32,
        scale: f64,
        s2: &[Vec<f64>],
        visit: &mut dyn FnMut(&[u32], f64),
    ) {
        if pos == a.len() {
            let m: u32 = r.iter().sum();
            if m <= n {
                visit(r, scale * stirling * falling_factorial(n, m));
            }
            return;
        }
        let lo = u32::from(a[pos] > 0);
        for v in lo..=a[pos] {
            r[pos] = v;
            rec(
                pos + 1,
                a,
                r,
                stirling * s2[a[pos] as usize][v as usize],
                n,
                scale,
                s2,
                visit,
            );
        }
        r[pos] = 0;
    }
    rec(0, a, &mut r, 1.0, n, scale, s2, &mut visit);
}

/// The linear map `x -> x^{(q)}` as row-major substitution rows.
fn mutation_rows(d: usize, qn: Option<&MutationRates>) -> Vec<f64> {
    let mut rows = vec![0.0; d * d];
    for i in 0..d {
        rows[i * d + i] = 1.0;
        if let Some(q) = qn {
            for j in 0..d {
                rows[i * d + j] += q.get(j, i);
            }
        }
    }
    rows
}

/// `B p` as a polynomial, exactly: polynomials of degree `m` map to degree `<= m`.
pub fn apply_polynomial(p: &Polynomial, n: u32, qn: Option<&MutationRates>) -> Result<Polynomial> {
    let d = p.dim();
    if let Some(q) = qn {
        if q.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.dim(),
            });
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let s2 = stirling2_table(p.degree() as usize);
    let mut in_y = Polynomial::zero(d);
    for (a, c) in p.terms() {
        multinomial_moment_terms(a, n, &s2, |r, coef| in_y.add_term(r.to_vec(), c * coef));
    }
    Ok(match qn {
        Some(_) => in_y.compose_linear(&mutation_rows(d, qn)),
        None => in_y,
    })
}

/// `B^steps p` as a polynomial.
pub fn iterate_polynomial(
    p: &Polynomial,
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
) -> Result<Polynomial> {
    let mut current = p.clone();
    for _ in 0..steps {
        current = apply_polynomial(&current, n, qn)?;
    }
    Ok(current)
}

/// Highest tensor order accepted by [`apply_moment_exact`].
pub const MAX_EXACT_MOMENT_ORDER: usize = 4;

/// `B[<beta, G^{(x)N}>](x)` with `G = K/n`, from multinomial factorial moments.
/// Cost is `O(d^N)`, independent of the lattice size.
pub fn apply_moment_exact(
    beta: &MomentTensor,
    x: &SimplexPoint,
    n: u32,
    qn: Option<&MutationRates>,
) -> Result<f64> {
    let order = beta.order();
    if order > MAX_EXACT_MOMENT_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let d = x.dim();
    if beta.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: beta.dim(),
        });
    }
    let mut y = vec![0.0; d];
    match qn {
        Some(q) => mutate_into(x.coords(), q, &mut y)?,
        None => y.copy_from_slice(x.coords()),
    }
    let s2 = stirling2_table(order);
    let mut acc = CompensatedSum::new();
    let mut a = vec![0u32; d];
    for (idx, &b) in beta.entries().iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        a.iter_mut().for_each(|v| *v = 0);
        let mut rest = idx;
        for _ in 0..order {
            a[rest % d] += 1;
            rest /= d;
        }
        multinomial_moment_terms(&a, n, &s2, |r, coef| {
            let mono: f64 = r
                .iter()
                .zip(&y)
                .map(|(&ri, yi)| yi.powi(ri as i32))
                .product();
            acc.add(b * coef * mono);
        });
    }
    Ok(acc.value())
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Runs one chain of `steps` transitions from `x` into `state` (frequencies).
fn run_chain<R: RngCore + ?Sized>(
    x: &[f64],
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
    rng: &mut R,
    state: &mut [f64],
) -> Result<()> {
    let d = x.len();
    let mut probs = vec![0.0; d];
    let mut counts = vec![0u32; d];
    state.copy_from_slice(x);
    for _ in 0..steps {
        match qn {
            Some(q) => mutate_into(state, q, &mut probs)?,
            None => probs.copy_from_slice(state),
        }
        sample_multinomial_into(&probs, n, rng, &mut counts);
        for (s, &c) in state.iter_mut().zip(&counts) {
            *s = c as f64 / n as f64;
        }
    }
    Ok(())
}

/// Monte-Carlo estimate of `B^steps f(x)`. Path `p` draws from
/// `RngStream::new(seed, p)`, so the result does not depend on the thread count.
pub fn iterate_mc(
    f: &dyn SimplexFunction,
    x: &SimplexPoint,
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
    paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    if paths < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 paths, got {paths}"
        )));
    }
    let values = (0..paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; x.dim()],
            |state, p| {
                let mut rng = RngStream::new(seed, p as u64);
                run_chain(x.coords(), n, steps, qn, &mut rng, state)?;
                Ok(f.value(state))
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_and_stderr(&values);
    Ok(McEstimate { estimate, stderr })
}

/// A sampled Wright-Fisher chain `H^0 = x, H^1, ..., H^N`.
///
/// `H^0` is the real start point; later states are lattice counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrajectory {
    pub start: SimplexPoint,
    pub states: Vec<LatticeIndex>,
    pub n: u32,
    pub qn: Option<MutationRates>,
}

impl ChainTrajectory {
    /// Number of transitions `N`.
    pub fn steps(&self) -> usize {
        self.states.len()
    }

    /// `H^m` as a frequency vector.
    pub fn point(&self, m: usize) -> Vec<f64> {
        if m == 0 {
            self.start.coords().to_vec()
        } else {
            self.states[m - 1].frequencies()
        }
    }

    /// Increments `H^{m+1} - H^m`; compensated increments also subtract the
    /// mutation drift `(H^m)^{(q_n)} - H^m`.
    pub fn increments(&self, compensate: bool) -> Result<Vec<Vec<f64>>> {
        let d = self.start.dim();
        let mut out = Vec::with_capacity(self.steps());
        let mut drift = vec![0.0; d];
        for m in 0..self.steps() {
            let from = self.point(m);
            let to = self.point(m + 1);
            match (&self.qn, compensate) {
                (Some(q), true) => mutate_into(&from, q, &mut drift)?,
                _ => drift.copy_from_slice(&from),
            }
            out.push((0..d).map(|i| to[i] - drift[i]).collect());
        }
        Ok(out)
    }

    /// CSV with columns `step,k_1..k_d`; step 0 holds `n x`, which need not be integral.
    pub fn to_csv(&self) -> String {
        let d = self.start.dim();
        let mut s = String::from("step");
        for i in 1..=d {
            s.push_str(&format!(",k_{i}"));
        }
        s.push('\n');
        s.push('0');
        for c in self.start.coords() {
            s.push_str(&format!(",{}", c * self.n as f64));
        }
        s.push('\n');
        for (m, k) in self.states.iter().enumerate() {
            s.push_str(&(m + 1).to_string());
            for c in k.counts() {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Samples `steps` transitions of the (mutated) Wright-Fisher chain from `x`.
pub fn sample_chain<R: RngCore + ?Sized>(
    x: &SimplexPoint,
    n: u32,
    steps: usize,
    qn: Option<&MutationRates>,
    rng: &mut R,
) -> Result<ChainTrajectory> {
    let d = x.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut probs = vec![0.0; d];
    let mut state = x.coords().to_vec();
    let mut states = Vec::with_capacity(steps);
    for _ in 0..steps {
        match qn {
            Some(q) => mutate_into(&state, q, &mut probs)?,
            None => probs.copy_from_slice(&state),
        }
        let mut counts = vec![0u32; d];
        sample_multinomial_into(&probs, n, rng, &mut counts);
        for (s, &c) in state.iter_mut().zip(&counts) {
            *s = c as f64 / n as f64;
        }
        states.push(LatticeIndex::new(counts)?);
    }
    Ok(ChainTrajectory {
        start: x.clone(),
        states,
        n,
        qn: qn.cloned(),
    })
}

/// A piecewise-linear path on `[0, 1]` with nodes at `t = m / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedPath {
    pub n: u32,
    /// Node values, `n + 1` raw `d`-vectors.
    pub values: Vec<Vec<f64>>,
}

impl InterpolatedPath {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|m| m as f64 / self.n as f64).collect()
    }

    /// Linear interpolation between the nodes around `t` (clamped to `[0, 1]`).
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let s = t.clamp(0.0, 1.0) * self.n as f64;
        let m = (s.floor() as usize).min(self.n as usize);
        if m == self.n as usize {
            return self.values[m].clone();
        }
        let frac = s - m as f64;
        self.values[m]
            .iter()
            .zip(&self.values[m + 1])
            .map(|(a, b)| a + frac * (b - a))
            .collect()
    }
}

/// Linear interpolation of the chain on `[0, 1]`. Nodes beyond the last
/// sampled state repeat it. The compensated path subtracts
/// `n t (x^{(q_n)} - x)` with `x` the start point.
pub fn interpolate_path(traj: &ChainTrajectory, compensate: bool) -> Result<InterpolatedPath> {
    let n = traj.n;
    let d = traj.start.dim();
    let mut drift = vec![0.0; d];
    if compensate {
        if let Some(q) = &traj.qn {
            mutate_into(traj.start.coords(), q, &mut drift)?;
            for (v, x) in drift.iter_mut().zip(traj.start.coords()) {
                *v -= x;
            }
        }
    }
    let values = (0..=n as usize)
        .map(|m| {
            let h = traj.point(m.min(traj.steps()));
            h.iter()
                .zip(&drift)
                .map(|(v, b)| v - m as f64 * b)
                .collect()
        })
        .collect();
    Ok(InterpolatedPath { n, values })
}

/// `max_{s < t} |path(t) - path(s)| / |t - s|^alpha` over node pairs.
pub fn holder_statistic(path: &InterpolatedPath, alpha: f64) -> f64 {
    assert!(
        alpha > 0.0 && alpha < 1.0 + 1e-12,
        "alpha must lie in (0, 1]"
    );
    let v = &path.values;
    let h = 1.0 / path.n as f64;
    let mut best: f64 = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let dist: f64 = v[i]
                .iter()
                .zip(&v[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.max(dist / ((j - i) as f64 * h).powf(alpha));
        }
    }
    best
}

/// `E |H^{m+gap} - H^m|^{2 beta}` pooled over starting steps `m` and paths,
/// returned with its standard error.
pub fn increment_moment(trajs: &[ChainTrajectory], gap: usize, beta: u32) -> (f64, f64) {
    let values: Vec<f64> = trajs
        .iter()
        .flat_map(|t| {
            (0..=t.steps().saturating_sub(gap))
                .filter(move |_| gap <= t.steps())
                .map(move |m| {
                    let a = t.point(m);
                    let b = t.point(m + gap);
                    let sq: f64 = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum();
                    sq.powi(beta as i32)
                })
        })
        .collect();
    mean_and_stderr(&values)
}

/// Result of [`longrun_limit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LongRunLimit {
    pub value: f64,
    pub iterations: usize,
    pub final_change: f64,
    pub grid: GridFunction,
}

/// Iterates the mutation-free operator until the sup-norm change of the grid
/// function drops below `tol`, then evaluates at `x`.
pub fn longrun_limit(
    g: &GridFunction,
    x: &SimplexPoint,
    tol: f64,
    max_iterations: usize,
) -> Result<LongRunLimit> {
    let op = BernsteinOperator::new(g.d, g.n, None)?;
    let matrix = op.transition_matrix()?;
    let mut current = g.clone();
    for it in 1..=max_iterations {
        let next = match &matrix {
            Some(m) => GridFunction {
                d: g.d,
                n: g.n,
                values: m.apply(&current.values),
            },
            None => op.step(&current)?,
        };
        let change = next.max_abs_diff(&current);
        current = next;
        if change < tol {
            return Ok(LongRunLimit {
                value: op.apply_grid(&current, x)?,
                iterations: it,
                final_change: change,
                grid: current,
            });
        }
    }
    Err(Error::NoConvergence(max_iterations))
}

/// `sum_i x_i f(e_i)`: the absorbed value of the mutation-free chain.
pub fn vertex_interpolant(g: &GridFunction, x: &SimplexPoint) -> Result<f64> {
    let lattice = Lattice::new(g.d, g.n)?;
    let mut acc = CompensatedSum::new();
    for i in 0..g.d {
        let mut counts = vec![0u32; g.d];
        counts[i] = g.n;
        let idx = lattice.rank(&counts).expect("vertex is on the lattice");
        acc.add(x.coords()[i] * g.values[idx]);
    }
    Ok(acc.value())
}
