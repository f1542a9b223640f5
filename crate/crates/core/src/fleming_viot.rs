//! Discretized Fleming-Viot machinery: moment functionals on a finite type
//! grid, sampling operators, the generator on moment functionals, the
//! growing-dimension schedule, and comparisons against the Bernstein chain.
//!
//! Measures are always atomic on the current grid: `mu_x = sum_i x_i delta_{z_i}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bernstein::{apply_moment_exact, iterate, iterate_polynomial};
use crate::error::{Error, Result};
use crate::mutation::{MutationOperator, MutationSchedule};
use crate::polynomial::Polynomial;
use crate::semigroup::{expm, step_count, IterationRoute};
use crate::simplex::SimplexPoint;
use crate::stats::{loglog_fit, CompensatedSum};

/// Largest tensor extent `d^N` accepted.
pub const DEFAULT_TENSOR_CAP: usize = 1 << 24;
/// Largest stacked dimension `d + d^2 + ... + d^N` of the moment hierarchy.
pub const DEFAULT_HIERARCHY_CAP: usize = 4000;

/// A finite set of distinct type points `z_1 < ... < z_d` in `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    points: Vec<f64>,
}

impl Discretization {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "a discretization needs at least two points".into(),
            ));
        }
        for (i, a) in points.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(format!("grid point {i} is {a}")));
            }
            if points[..i].contains(a) {
                return Err(Error::InvalidArgument(format!(
                    "grid point {a} is repeated"
                )));
            }
        }
        Ok(Self { points })
    }

    /// `{i/d : i = 1..d}`.
    pub fn unit_interval(d: usize) -> Self {
        Self {
            points: (1..=d).map(|i| i as f64 / d as f64).collect(),
        }
    }

    /// Spacing `1/sqrt(d)`: `{0, +-1, ..., +-(d/2 - 1), d/2} / sqrt(d)` for even
    /// `d`, `{0, +-1, ..., +-(d-1)/2} / sqrt(d)` for odd `d`, ascending.
    pub fn ohta_kimura(d: usize) -> Self {
        let h = 1.0 / (d as f64).sqrt();
        let lo = -(((d - 1) / 2) as i64);
        Self {
            points: (0..d as i64).map(|k| (lo + k) as f64 * h).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of `z` on the grid (within `1e-12`).
    pub fn locate(&self, z: f64) -> Option<usize> {
        self.points.iter().position(|p| (p - z).abs() <= 1e-12)
    }
}

/// The map `n -> d_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum DimensionSchedule {
    Fixed(usize),
    /// `d_n = max(2, floor(n^{1/k}))`, computed in integers.
    Root {
        k: u32,
    },
    /// Explicit `(n, d)` pairs; other `n` take the entry with the largest `n' <= n`.
    Explicit(Vec<(u64, usize)>),
}

fn integer_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).floor() as u64;
    let pow = |b: u64| (b as u128).checked_pow(k).unwrap_or(u128::MAX);
    while r > 0 && pow(r) > n as u128 {
        r -= 1;
    }
    while pow(r + 1) <= n as u128 {
        r += 1;
    }
    r
}

impl DimensionSchedule {
    pub fn dim(&self, n: u64) -> usize {
        match self {
            DimensionSchedule::Fixed(d) => *d,
            DimensionSchedule::Root { k } => (integer_root(n, *k) as usize).max(2),
            DimensionSchedule::Explicit(pairs) => pairs
                .iter()
                .filter(|(m, _)| *m <= n)
                .max_by_key(|(m, _)| *m)
                .or_else(|| pairs.iter().min_by_key(|(m, _)| *m))
                .map(|(_, d)| *d)
                .unwrap_or(2),
        }
    }

    /// Checks monotonicity and the fitted growth exponent (must stay below 1/8).
    pub fn check(&self, ns: &[u64]) -> ScheduleCheck {
        let ds: Vec<usize> = ns.iter().map(|&n| self.dim(n)).collect();
        let nondecreasing = ds.windows(2).all(|w| w[1] >= w[0]);
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
        let fitted_exponent = loglog_fit(&xs, &ys).map(|f| f.slope).unwrap_or(0.0);
        ScheduleCheck {
            dims: ds,
            nondecreasing,
            fitted_exponent,
            pass: nondecreasing && fitted_exponent < 0.125,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleCheck {
    pub dims: Vec<usize>,
    pub nondecreasing: bool,
    pub fitted_exponent: f64,
    pub pass: bool,
}

/// A dense order-`N` tensor over `{0..d-1}^N`. Slot 1 varies fastest:
/// the flat index of `(i_1, ..., i_N)` is `i_1 + d i_2 + ... + d^{N-1} i_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor {
    d: usize,
    order: usize,
    entries: Vec<f64>,
}

fn extent(d: usize, order: usize) -> Option<usize> {
    d.checked_pow(order as u32)
}

impl MomentTensor {
    pub fn new(d: usize, order: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::UnsupportedOrder(0));
        }
        let size = extent(d, order).ok_or(Error::CapExceeded {
            size: usize::MAX,
            cap: DEFAULT_TENSOR_CAP,
        })?;
        if size > DEFAULT_TENSOR_CAP {
            return Err(Error::CapExceeded {
                size,
                cap: DEFAULT_TENSOR_CAP,
            });
        }
        if entries.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: entries.len(),
            });
        }
        Ok(Self { d, order, entries })
    }

    pub fn from_fn(d: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let size = extent(d, order).unwrap_or(usize::MAX);
        if size > DEFAULT_TENSOR_CAP {
            return Err(Error::CapExceeded {
                size,
                cap: DEFAULT_TENSOR_CAP,
            });
        }
        let mut idx = vec![0usize; order];
        let entries = (0..size)
            .map(|flat| {
                decode(flat, d, &mut idx);
                f(&idx)
            })
            .collect();
        Self::new(d, order, entries)
    }

    /// Outer product `g_1 (x) g_2 (x) ... (x) g_N`.
    pub fn product(factors: &[&[f64]]) -> Result<Self> {
        let d = factors
            .first()
            .map(|f| f.len())
            .ok_or(Error::UnsupportedOrder(0))?;
        if factors.iter().any(|f| f.len() != d) {
            return Err(Error::InvalidArgument("factors differ in length".into()));
        }
        Self::from_fn(d, factors.len(), |idx| {
            idx.iter().zip(factors).map(|(&i, f)| f[i]).product()
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[encode(idx, self.d)]
    }

    /// `<beta, x^{(x)N}>` by successive contraction, `O(d^N)`.
    pub fn contract(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d);
        let mut current = self.entries.clone();
        // slot 1 is fastest, so each pass contracts the leading slot
        for _ in 0..self.order {
            current = current
                .chunks_exact(self.d)
                .map(|chunk| {
                    let mut acc = CompensatedSum::new();
                    for (c, xi) in chunk.iter().zip(x) {
                        acc.add(c * xi);
                    }
                    acc.value()
                })
                .collect();
        }
        current[0]
    }

    /// `sum_i beta_i prod_m x_{i_m}` as a polynomial in `d` variables.
    pub fn to_polynomial(&self) -> Polynomial {
        let mut p = Polynomial::zero(self.d);
        let mut idx = vec![0usize; self.order];
        for (flat, &b) in self.entries.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            decode(flat, self.d, &mut idx);
            let mut e = vec![0u32; self.d];
            for &i in &idx {
                e[i] += 1;
            }
            p.add_term(e, b);
        }
        p
    }

    /// Relabels the grid: entry `(i_1..i_N)` moves to `(perm[i_1]..perm[i_N])`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut out = vec![0.0; self.entries.len()];
        let mut idx = vec![0usize; self.order];
        for (flat, &b) in self.entries.iter().enumerate() {
            decode(flat, self.d, &mut idx);
            idx.iter_mut().for_each(|i| *i = perm[*i]);
            out[encode(&idx, self.d)] = b;
        }
        Self {
            d: self.d,
            order: self.order,
            entries: out,
        }
    }

    fn axpy(&mut self, a: f64, other: &MomentTensor) {
        for (u, v) in self.entries.iter_mut().zip(&other.entries) {
            *u += a * v;
        }
    }

    fn zeros(d: usize, order: usize) -> Self {
        Self {
            d,
            order,
            entries: vec![0.0; d.pow(order as u32)],
        }
    }
}

fn decode(mut flat: usize, d: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut() {
        *slot = flat % d;
        flat /= d;
    }
}

fn encode(idx: &[usize], d: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * d + i)
}

type Kernel = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `phi(mu) = <beta, mu^{(x)N}>` with `beta` a function on `E^N`.
#[derive(Clone)]
pub struct MomentFunctional {
    order: usize,
    beta: Kernel,
}

impl std::fmt::Debug for MomentFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentFunctional")
            .field("order", &self.order)
            .finish()
    }
}

impl MomentFunctional {
    pub fn new(order: usize, beta: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if order == 0 {
            return Err(Error::UnsupportedOrder(0));
        }
        Ok(Self {
            order,
            beta: Arc::new(beta),
        })
    }

    /// `<gamma, mu>`.
    pub fn linear(gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            order: 1,
            beta: Arc::new(move |z| gamma(z[0])),
        }
    }

    /// `<gamma, mu>^2`, i.e. `beta = gamma (x) gamma`.
    pub fn squared_mean(gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            order: 2,
            beta: Arc::new(move |z| gamma(z[0]) * gamma(z[1])),
        }
    }

    /// `<gamma^2, mu> - <gamma, mu>^2`, with `beta(z, w) = (gamma(z) - gamma(w))^2 / 2`.
    pub fn variance(gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            order: 2,
            beta: Arc::new(move |z| 0.5 * (gamma(z[0]) - gamma(z[1])).powi(2)),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn beta(&self, z: &[f64]) -> f64 {
        (self.beta)(z)
    }

    /// `beta` at every grid tuple.
    pub fn discretize(&self, disc: &Discretization) -> Result<MomentTensor> {
        let mut z = vec![0.0; self.order];
        MomentTensor::from_fn(disc.len(), self.order, |idx| {
            for (zi, &i) in z.iter_mut().zip(idx) {
                *zi = disc.points[i];
            }
            (self.beta)(&z)
        })
    }

    /// `Q^{(N)} beta` at grid tuples, with the continuum operator acting on
    /// each argument in turn.
    pub fn mutation_tensor(
        &self,
        disc: &Discretization,
        op: &dyn MutationOperator,
    ) -> Result<MomentTensor> {
        let pts = disc.points();
        MomentTensor::from_fn(disc.len(), self.order, |idx| {
            let base: Vec<f64> = idx.iter().map(|&i| pts[i]).collect();
            (0..self.order)
                .map(|m| {
                    let section = |w: f64| {
                        let mut z = base.clone();
                        z[m] = w;
                        (self.beta)(&z)
                    };
                    op.apply(&section, base[m])
                })
                .sum()
        })
    }
}

/// `P_d phi`: the polynomial `x -> <beta, mu_x^{(x)N}>` on the simplex.
pub fn project_pd(phi: &MomentFunctional, disc: &Discretization) -> Result<Polynomial> {
    Ok(phi.discretize(disc)?.to_polynomial())
}

/// `Phi_{l1 l2}^{(N)}`: replace argument `l2` by argument `l1` and renumber
/// (1-based slots, `l1 < l2`).
pub fn sampling_operator(beta: &MomentTensor, l1: usize, l2: usize) -> Result<MomentTensor> {
    let n = beta.order;
    if n < 2 || l1 < 1 || l1 >= l2 || l2 > n {
        return Err(Error::InvalidArgument(format!(
            "sampling operator needs 1 <= l1 < l2 <= N with N >= 2 (got l1={l1}, l2={l2}, N={n})"
        )));
    }
    let mut full = vec![0usize; n];
    MomentTensor::from_fn(beta.d, n - 1, |idx| {
        // idx = (z_1..z_{N-1}); argument l2 of beta gets z_{l1}
        full[..l2 - 1].copy_from_slice(&idx[..l2 - 1]);
        full[l2 - 1] = idx[l1 - 1];
        full[l2..].copy_from_slice(&idx[l2 - 1..]);
        beta.get(&full)
    })
}

/// `sum_m` (the `d x d` matrix applied along mode `m`): the generator of the
/// product chain on `N` independent grid coordinates.
pub fn apply_qn(beta: &MomentTensor, q: &[f64]) -> Result<MomentTensor> {
    let d = beta.d;
    if q.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: q.len(),
        });
    }
    let mut out = MomentTensor::zeros(d, beta.order);
    let mut idx = vec![0usize; beta.order];
    for flat in 0..beta.entries.len() {
        decode(flat, d, &mut idx);
        let mut acc = 0.0;
        let mut stride = 1;
        for &i in idx.iter() {
            let base = flat - i * stride;
            for j in 0..d {
                let rate = q[i * d + j];
                if rate != 0.0 {
                    acc += rate * beta.entries[base + j * stride];
                }
            }
            stride *= d;
        }
        out.entries[flat] = acc;
    }
    Ok(out)
}

/// Sum over slot pairs of the sampling operators.
fn sampling_sum(beta: &MomentTensor) -> Result<Option<MomentTensor>> {
    let n = beta.order;
    if n < 2 {
        return Ok(None);
    }
    let mut acc = MomentTensor::zeros(beta.d, n - 1);
    for l1 in 1..n {
        for l2 in l1 + 1..=n {
            acc.axpy(1.0, &sampling_operator(beta, l1, l2)?);
        }
    }
    Ok(Some(acc))
}

fn pairs(n: usize) -> f64 {
    (n * (n.saturating_sub(1)) / 2) as f64
}

/// `sum_{l1<l2} (<Phi beta, mu_x^{N-1}> - <beta, mu_x^N>) + <q_beta, mu_x^N>`
/// with `q_beta = Q^{(N)} beta` precomputed (or absent for no mutation).
pub fn frak_a_value(
    beta: &MomentTensor,
    q_beta: Option<&MomentTensor>,
    x: &SimplexPoint,
) -> Result<f64> {
    if x.dim() != beta.d {
        return Err(Error::DimensionMismatch {
            expected: beta.d,
            got: x.dim(),
        });
    }
    let x = x.coords();
    let mut v = q_beta.map_or(0.0, |t| t.contract(x));
    if let Some(s) = sampling_sum(beta)? {
        v += s.contract(x) - pairs(beta.order) * beta.contract(x);
    }
    Ok(v)
}

/// The Fleming-Viot generator on `<beta, mu^N>` at `mu_x`, with the grid
/// mutation matrix `q` (row-major, `d x d`) or none.
pub fn apply_frak_a(beta: &MomentTensor, x: &SimplexPoint, q: Option<&[f64]>) -> Result<f64> {
    let q_beta = q.map(|q| apply_qn(beta, q)).transpose()?;
    frak_a_value(beta, q_beta.as_ref(), x)
}

/// One row of an infinite-dimensional Voronovskaya study.
#[derive(Debug, Clone, PartialEq)]
pub struct FvResidualRow {
    pub n: u64,
    pub d: usize,
    pub residual: f64,
}

/// `sup_x |n (B^{(q_n)} - I) P_d phi (x) - P_d (frak A phi)(x)|` over `grid(d_n)`,
/// with `q_n` from `schedule` and the limit mutation operator `limit(d_n)`.
pub fn vor_infinite_residual(
    phi: &MomentFunctional,
    n: u64,
    schedule: &MutationSchedule,
    limit: &dyn Fn(usize) -> Result<Arc<dyn MutationOperator>>,
    grid: &dyn Fn(usize) -> Result<Vec<SimplexPoint>>,
) -> Result<FvResidualRow> {
    let d = schedule.dim(n);
    let disc = schedule.model.grid(d)?;
    let beta = phi.discretize(&disc)?;
    let q_beta = phi.mutation_tensor(&disc, limit(d)?.as_ref())?;
    let qn = schedule.model.rates(n, d)?;
    let nn =
        u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("n = {n} is too large")))?;
    let nf = n as f64;
    let mut residual: f64 = 0.0;
    for x in grid(d)? {
        let b = apply_moment_exact(&beta, &x, nn, qn.as_ref())?;
        let lhs = nf * (b - beta.contract(x.coords()));
        let rhs = frak_a_value(&beta, Some(&q_beta), &x)?;
        residual = residual.max((lhs - rhs).abs());
    }
    Ok(FvResidualRow { n, d, residual })
}

/// Residual rows along `ns` with the fitted log-log decay exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct FvStudy {
    pub rows: Vec<FvResidualRow>,
    pub fitted_exponent: f64,
    pub strictly_decreasing: bool,
}

impl FvStudy {
    pub const CSV_HEADER: &'static str = "n,d_n,residual,fitted_exponent";

    pub fn from_rows(rows: Vec<FvResidualRow>) -> Self {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.residual).collect();
        let fitted_exponent = loglog_fit(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN);
        let strictly_decreasing = ys.windows(2).all(|w| w[1] < w[0]);
        Self {
            rows,
            fitted_exponent,
            strictly_decreasing,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:e},{}\n",
                r.n, r.d, r.residual, self.fitted_exponent
            ));
        }
        s
    }
}

/// The stacked tensors `beta_1(t), ..., beta_N(t)` with
/// `E[phi(X_t)] = sum_k <beta_k(t), mu^k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FvMomentOracle {
    pub tensors: Vec<MomentTensor>,
}

impl FvMomentOracle {
    pub fn eval(&self, x: &SimplexPoint) -> f64 {
        self.tensors.iter().map(|t| t.contract(x.coords())).sum()
    }

    /// The same function as a polynomial on the simplex.
    pub fn to_polynomial(&self) -> Polynomial {
        self.tensors
            .iter()
            .fold(Polynomial::zero(self.tensors[0].d), |acc, t| {
                &acc + &t.to_polynomial()
            })
    }
}

/// Highest order accepted by [`fv_moment_oracle`].
pub const MAX_ORACLE_ORDER: usize = 3;

/// Solves the moment hierarchy
/// `d beta_k / dt = (Q^{(k)} - C(k,2)) beta_k + sum_pairs Phi beta_{k+1}`
/// from `beta_N(0) = beta`, `beta_k(0) = 0` for `k < N`, by a matrix exponential.
pub fn fv_moment_oracle(beta: &MomentTensor, t: f64, q: Option<&[f64]>) -> Result<FvMomentOracle> {
    let order = beta.order;
    let d = beta.d;
    if order > MAX_ORACLE_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let sizes: Vec<usize> = (1..=order).map(|k| d.pow(k as u32)).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    if total > DEFAULT_HIERARCHY_CAP {
        return Err(Error::CapExceeded {
            size: total,
            cap: DEFAULT_HIERARCHY_CAP,
        });
    }
    let zero_q = vec![0.0; d * d];
    let q = q.unwrap_or(&zero_q);
    let mut m = DMatrix::<f64>::zeros(total, total);
    for k in 1..=order {
        for col in 0..sizes[k - 1] {
            let mut unit = MomentTensor::zeros(d, k);
            unit.entries[col] = 1.0;
            let mut same = apply_qn(&unit, q)?;
            same.axpy(-pairs(k), &unit);
            for (row, v) in same.entries.iter().enumerate() {
                m[(offsets[k - 1] + row, offsets[k - 1] + col)] += v;
            }
            if let Some(lower) = sampling_sum(&unit)? {
                for (row, v) in lower.entries.iter().enumerate() {
                    m[(offsets[k - 2] + row, offsets[k - 1] + col)] += v;
                }
            }
        }
    }
    let mut init = DVector::zeros(total);
    for (i, v) in beta.entries.iter().enumerate() {
        init[offsets[order - 1] + i] = *v;
    }
    let state = if t == 0.0 {
        init
    } else {
        expm(&(m * t)) * init
    };
    let tensors = (1..=order)
        .map(|k| {
            let o = offsets[k - 1];
            MomentTensor::new(d, k, state.as_slice()[o..o + sizes[k - 1]].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FvMomentOracle { tensors })
}

/// `sup_x |(B^{(q_n)})^{floor(nt)} P_d phi(x) - E[phi(X_t)]|` over `grid`, at a fixed grid
/// dimension. `qn` is the per-generation rate matrix and `q` the limit matrix.
pub fn fv_semigroup_error(
    beta: &MomentTensor,
    n: u32,
    t: f64,
    qn: Option<&crate::mutation::MutationRates>,
    q: Option<&[f64]>,
    grid: &[SimplexPoint],
    route: IterationRoute,
) -> Result<f64> {
    let oracle = fv_moment_oracle(beta, t, q)?;
    let p = beta.to_polynomial();
    let steps = step_count(n, t);
    let iterated = match route {
        IterationRoute::Lattice => None,
        _ => Some(iterate_polynomial(&p, n, steps, qn)?),
    };
    let mut worst: f64 = 0.0;
    for x in grid {
        let lhs = match &iterated {
            Some(poly) => poly.eval(x.coords()),
            None => iterate(&p, x, n, steps, qn)?,
        };
        worst = worst.max((lhs - oracle.eval(x)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::apply_aq;
    use crate::mutation::{
        q3_deviation, uniform_mutation, MutationModel, MutationRates, UniformMutationLimit,
    };
    use crate::semigroup::exact_tt;
    use crate::simplex::{random_simplex_points, simplex_grid};

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn grids() {
        assert_eq!(
            Discretization::unit_interval(4).points(),
            &[0.25, 0.5, 0.75, 1.0]
        );
        let h = 0.5;
        assert_eq!(
            Discretization::ohta_kimura(4).points(),
            &[-h, 0.0, h, 2.0 * h]
        );
        let odd = Discretization::ohta_kimura(5);
        let h = 1.0 / 5f64.sqrt();
        assert_eq!(odd.points(), &[-2.0 * h, -h, 0.0, h, 2.0 * h]);
        assert!(Discretization::new(vec![0.1, 0.2, 0.1]).is_err());
    }

    #[test]
    fn schedules() {
        let root = DimensionSchedule::Root { k: 9 };
        assert_eq!(root.dim(512), 2);
        assert_eq!(root.dim(19682), 2);
        assert_eq!(root.dim(19683), 3);
        assert_eq!(root.dim(10), 2);
        let c = root.check(&[512, 19683, 262_144, 1_953_125]);
        assert!(c.pass && c.fitted_exponent < 0.125);
        let fast = DimensionSchedule::Root { k: 2 };
        assert!(!fast.check(&[16, 64, 256, 1024]).pass);
        let explicit = DimensionSchedule::Explicit(vec![(100, 3), (10, 2)]);
        assert_eq!(explicit.dim(50), 2);
        assert_eq!(explicit.dim(500), 3);
        assert_eq!(explicit.dim(1), 2);
    }

    #[test]
    fn projections() {
        let disc = Discretization::unit_interval(3);
        let x = pt(&[0.2, 0.5, 0.3]);
        let one = project_pd(&MomentFunctional::linear(|_| 1.0), &disc).unwrap();
        assert!((one.eval(x.coords()) - 1.0).abs() < 1e-15);
        let mean = project_pd(&MomentFunctional::linear(|z| z), &disc).unwrap();
        let m = 0.2 / 3.0 + 0.5 * 2.0 / 3.0 + 0.3;
        assert!((mean.eval(x.coords()) - m).abs() < 1e-15);
        let sq = project_pd(&MomentFunctional::squared_mean(|z| z), &disc).unwrap();
        assert!((sq.eval(x.coords()) - m * m).abs() < 1e-15);
    }

    #[test]
    fn sampling_operator_examples() {
        let disc = Discretization::unit_interval(3);
        let beta = MomentFunctional::new(3, |z| z[0] + 10.0 * z[1] + 100.0 * z[2] * z[2]).unwrap();
        let t = beta.discretize(&disc).unwrap();
        let f = |a: f64, b: f64, c: f64| a + 10.0 * b + 100.0 * c * c;
        let p = disc.points();
        let s12 = sampling_operator(&t, 1, 2).unwrap();
        let s13 = sampling_operator(&t, 1, 3).unwrap();
        let s23 = sampling_operator(&t, 2, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s12.get(&[i, j]), f(p[i], p[i], p[j]));
                assert_eq!(s13.get(&[i, j]), f(p[i], p[j], p[i]));
                assert_eq!(s23.get(&[i, j]), f(p[i], p[j], p[j]));
            }
        }
        let g = [0.5, -1.0, 2.0];
        let diag = sampling_operator(&MomentTensor::product(&[&g, &g]).unwrap(), 1, 2).unwrap();
        for (i, gi) in g.iter().enumerate() {
            assert_eq!(diag.get(&[i]), gi * gi);
        }
        assert!(sampling_operator(&t, 2, 2).is_err());
        assert!(sampling_operator(&t, 1, 4).is_err());
    }

    #[test]
    fn mode_sum_examples() {
        let q = uniform_mutation(1, 3, 1.0).unwrap();
        let qm = q.as_slice();
        let g = [0.3, -0.7, 1.1];
        let one = MomentTensor::new(3, 1, g.to_vec()).unwrap();
        let qg: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| qm[i * 3 + j] * g[j]).sum())
            .collect();
        assert_eq!(apply_qn(&one, qm).unwrap().entries(), &qg[..]);
        let two = apply_qn(&MomentTensor::product(&[&g, &g]).unwrap(), qm).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((two.get(&[i, j]) - (qg[i] * g[j] + g[i] * qg[j])).abs() < 1e-15);
            }
        }
        let constant = MomentTensor::new(3, 3, vec![2.0; 27]).unwrap();
        assert!(apply_qn(&constant, qm)
            .unwrap()
            .entries()
            .iter()
            .all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn frak_a_examples() {
        let disc = Discretization::unit_interval(4);
        let x = pt(&[0.1, 0.2, 0.3, 0.4]);
        let g = |z: f64| z * z - 0.3;
        let beta = MomentFunctional::squared_mean(g).discretize(&disc).unwrap();
        let mean: f64 = disc
            .points()
            .iter()
            .zip(x.coords())
            .map(|(z, w)| g(*z) * w)
            .sum();
        let mean_sq: f64 = disc
            .points()
            .iter()
            .zip(x.coords())
            .map(|(z, w)| g(*z).powi(2) * w)
            .sum();
        let v = apply_frak_a(&beta, &x, None).unwrap();
        assert!((v - (mean_sq - mean * mean)).abs() < 1e-15);
        let q = uniform_mutation(1, 4, 1.0).unwrap();
        let constant = MomentTensor::new(4, 2, vec![3.0; 16]).unwrap();
        assert!(
            apply_frak_a(&constant, &x, Some(q.as_slice()))
                .unwrap()
                .abs()
                < 1e-14
        );
        let lin = MomentFunctional::linear(g).discretize(&disc).unwrap();
        let qb = apply_qn(&lin, q.as_slice()).unwrap();
        assert_eq!(
            apply_frak_a(&lin, &x, Some(q.as_slice())).unwrap(),
            qb.contract(x.coords())
        );
    }

    #[test]
    fn reduction_identity() {
        // P_d (frak A phi) = A_d^{(q)} P_d phi with the grid matrix as q
        let disc = Discretization::unit_interval(3);
        let q = uniform_mutation(1, 3, 1.4).unwrap();
        for order in 1..=4 {
            let phi = MomentFunctional::new(order, |z| {
                z.iter()
                    .enumerate()
                    .map(|(m, v)| (m as f64 + 1.0) * v * v)
                    .product::<f64>()
                    + z[0]
            })
            .unwrap();
            let beta = phi.discretize(&disc).unwrap();
            let p = beta.to_polynomial();
            for x in random_simplex_points(3, 8, order as u64) {
                let a = apply_frak_a(&beta, &x, Some(q.as_slice())).unwrap();
                let b = apply_aq(&p, &x, Some(&q)).unwrap();
                assert!((a - b).abs() < 1e-10, "order {order}: {a} vs {b}");
            }
        }
    }

    fn uniform_setup(
        theta: f64,
    ) -> (
        MutationSchedule,
        impl Fn(usize) -> Result<Arc<dyn MutationOperator>>,
    ) {
        let sched = MutationSchedule::new(
            MutationModel::Uniform { theta },
            DimensionSchedule::Root { k: 9 },
        );
        let limit = move |_d: usize| -> Result<Arc<dyn MutationOperator>> {
            Ok(Arc::new(UniformMutationLimit { theta }))
        };
        (sched, limit)
    }

    #[test]
    fn first_order_residual_is_q3_deviation() {
        let (sched, limit) = uniform_setup(1.0);
        let phi = MomentFunctional::linear(|z| z);
        let grid = |d: usize| simplex_grid(d, 6);
        for n in [512u64, 19683] {
            let row = vor_infinite_residual(&phi, n, &sched, &limit, &grid).unwrap();
            let dev =
                q3_deviation(&sched, &UniformMutationLimit { theta: 1.0 }, &|z| z, n, 0).unwrap();
            assert!((row.residual - dev).abs() < 1e-10, "{row:?} vs {dev}");
        }
    }

    #[test]
    fn constant_functional_has_no_residual() {
        let (sched, limit) = uniform_setup(1.0);
        let phi = MomentFunctional::new(2, |_| 2.5).unwrap();
        let row =
            vor_infinite_residual(&phi, 512, &sched, &limit, &|d| simplex_grid(d, 5)).unwrap();
        assert!(row.residual < 1e-10);
    }

    #[test]
    fn residual_is_label_invariant() {
        let d = 4;
        let disc = Discretization::unit_interval(d);
        let beta = MomentFunctional::variance(|z| z * z)
            .discretize(&disc)
            .unwrap();
        let q = uniform_mutation(200, d, 1.0).unwrap();
        let qlim = uniform_mutation(1, d, 1.0).unwrap();
        let perm = [2usize, 0, 3, 1];
        let mut qp = vec![0.0; d * d];
        let mut qlp = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                qp[perm[i] * d + perm[j]] = q.get(i, j);
                qlp[perm[i] * d + perm[j]] = qlim.get(i, j);
            }
        }
        let qp = MutationRates::new(d, qp).unwrap();
        let bp = beta.relabel(&perm);
        let residual = |b: &MomentTensor, qn: &MutationRates, ql: &[f64], x: &SimplexPoint| {
            let lhs =
                200.0 * (apply_moment_exact(b, x, 200, Some(qn)).unwrap() - b.contract(x.coords()));
            (lhs - apply_frak_a(b, x, Some(ql)).unwrap()).abs()
        };
        for x in random_simplex_points(d, 6, 3) {
            let mut xp = vec![0.0; d];
            for i in 0..d {
                xp[perm[i]] = x.coords()[i];
            }
            let xp = SimplexPoint::new(xp).unwrap();
            let a = residual(&beta, &q, qlim.as_slice(), &x);
            let b = residual(&bp, &qp, &qlp, &xp);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_closed_forms() {
        let disc = Discretization::unit_interval(3);
        let x = pt(&[0.2, 0.5, 0.3]);
        let lin = MomentFunctional::linear(|z| z * z)
            .discretize(&disc)
            .unwrap();
        for t in [0.0, 0.4, 2.0] {
            let o = fv_moment_oracle(&lin, t, None).unwrap();
            assert!((o.eval(&x) - lin.contract(x.coords())).abs() < 1e-14);
        }
        let g = |z: f64| 2.0 * z - 0.5;
        let sq = MomentFunctional::squared_mean(g).discretize(&disc).unwrap();
        let mean: f64 = disc
            .points()
            .iter()
            .zip(x.coords())
            .map(|(z, w)| g(*z) * w)
            .sum();
        let mean_sq: f64 = disc
            .points()
            .iter()
            .zip(x.coords())
            .map(|(z, w)| g(*z).powi(2) * w)
            .sum();
        for t in [0.0f64, 0.5, 1.5] {
            let want = mean * mean + (mean_sq - mean * mean) * (1.0 - (-t).exp());
            let got = fv_moment_oracle(&sq, t, None).unwrap().eval(&x);
            assert!((got - want).abs() < 1e-13, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn oracle_matches_wright_fisher_semigroup() {
        let disc = Discretization::unit_interval(3);
        let q = uniform_mutation(1, 3, 1.2).unwrap();
        let beta = MomentFunctional::new(3, |z| z[0] * z[1] - z[2])
            .unwrap()
            .discretize(&disc)
            .unwrap();
        let fv = fv_moment_oracle(&beta, 0.7, Some(q.as_slice())).unwrap();
        let wf = exact_tt(&beta.to_polynomial(), 0.7, Some(&q)).unwrap();
        for x in random_simplex_points(3, 10, 2) {
            assert!((fv.eval(&x) - wf.eval(x.coords())).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_free_semigroup_error_vanishes() {
        let disc = Discretization::unit_interval(3);
        let beta = MomentFunctional::linear(|z| z.sin())
            .discretize(&disc)
            .unwrap();
        let grid = simplex_grid(3, 6).unwrap();
        for n in [10u32, 40] {
            let e = fv_semigroup_error(&beta, n, 0.5, None, None, &grid, IterationRoute::Lattice)
                .unwrap();
            assert!(e < 1e-12);
        }
        let q = uniform_mutation(1, 3, 1.0).unwrap();
        let e = fv_semigroup_error(
            &beta,
            10,
            0.0,
            Some(&q.scaled(0.1)),
            Some(q.as_slice()),
            &grid,
            IterationRoute::Polynomial,
        )
        .unwrap();
        assert!(e < 1e-14);
    }
}
