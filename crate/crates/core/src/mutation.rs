//! Mutation-rate matrices, the mutated frequency map, the two grid mutation
//! models (nearest-neighbour Ohta-Kimura and uniform neutral alleles), their
//! continuum limits, and finite-n checks of the rate assumptions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fleming_viot::{DimensionSchedule, Discretization};
use crate::simplex::{SimplexPoint, SIMPLEX_TOL};
use crate::stats::{adaptive_simpson, loglog_fit};

const ROW_SUM_TOL: f64 = 1e-12;

/// A `d x d` rate matrix with nonnegative off-diagonal entries and zero row sums.
///
/// `strict` records whether every off-diagonal entry is strictly positive.
/// Matrices built with [`MutationRates::new`] are always strict; the weak
/// constructor admits zeros (needed for tridiagonal models).
#[derive(Debug, Clone, PartialEq)]
pub struct MutationRates {
    d: usize,
    q: Vec<f64>,
    strict: bool,
}

impl MutationRates {
    /// Strict constructor: `q_ij > 0` for `i != j` and zero row sums.
    pub fn new(d: usize, q: Vec<f64>) -> Result<Self> {
        let rates = Self::new_weak(d, q)?;
        if !rates.strict {
            return Err(Error::InvalidRates(
                "an off-diagonal entry is zero; use the weak constructor".into(),
            ));
        }
        Ok(rates)
    }

    /// Weak constructor: `q_ij >= 0` for `i != j` and zero row sums.
    pub fn new_weak(d: usize, q: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidRates(format!("dimension {d} is below 2")));
        }
        if q.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: q.len(),
            });
        }
        let mut strict = true;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                let v = q[i * d + j];
                if !v.is_finite() {
                    return Err(Error::InvalidRates(format!("entry ({i},{j}) is {v}")));
                }
                if i != j {
                    if v < 0.0 {
                        return Err(Error::InvalidRates(format!(
                            "off-diagonal entry ({i},{j}) is negative: {v}"
                        )));
                    }
                    if v == 0.0 {
                        strict = false;
                    }
                }
                row += v;
            }
            if row.abs() > ROW_SUM_TOL {
                return Err(Error::InvalidRates(format!("row {i} sums to {row:e}")));
            }
        }
        Ok(Self { d, q, strict })
    }

    /// Builds the matrix from its off-diagonal part; the diagonal is set to
    /// minus the row sum.
    pub fn from_off_diagonal(d: usize, mut q: Vec<f64>, strict: bool) -> Result<Self> {
        if q.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: q.len(),
            });
        }
        for i in 0..d {
            let s: f64 = (0..d).filter(|&j| j != i).map(|j| q[i * d + j]).sum();
            q[i * d + i] = -s;
        }
        if strict {
            Self::new(d, q)
        } else {
            Self::new_weak(d, q)
        }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            d,
            q: vec![0.0; d * d],
            strict: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.d + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// Whether every off-diagonal entry is strictly positive.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d: self.d,
            q: self.q.iter().map(|v| v * s).collect(),
            strict: self.strict && s > 0.0,
        }
    }

    /// `max_{i,j} q_ij` (attained off the diagonal).
    pub fn max_entry(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &MutationRates) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV form: a `d,theta,model` header line, its values, then `d` rows of `q`.
    pub fn to_csv(&self, theta: f64, model: &str) -> String {
        let mut s = format!("d,theta,model\n{},{},{}\n", self.d, theta, model);
        for i in 0..self.d {
            let row: Vec<String> = (0..self.d).map(|j| format!("{}", self.get(i, j))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses [`MutationRates::to_csv`] output; returns `(rates, theta, model)`.
    pub fn from_csv(text: &str) -> Result<(Self, f64, String)> {
        let bad = |m: &str| Error::InvalidArgument(format!("mutation CSV: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("d,theta,model") {
            return Err(bad("missing `d,theta,model` header"));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("missing metadata row"))?
            .split(',')
            .collect();
        if meta.len() != 3 {
            return Err(bad("metadata row needs three fields"));
        }
        let d: usize = meta[0]
            .trim()
            .parse()
            .map_err(|_| bad("d is not an integer"))?;
        let theta: f64 = meta[1]
            .trim()
            .parse()
            .map_err(|_| bad("theta is not a number"))?;
        let model = meta[2].trim().to_string();
        let mut q = Vec::with_capacity(d * d);
        for _ in 0..d {
            let row = lines.next().ok_or_else(|| bad("too few matrix rows"))?;
            for v in row.split(',') {
                q.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad("matrix entry is not a number"))?,
                );
            }
        }
        Ok((Self::new_weak(d, q)?, theta, model))
    }
}

/// Writes `x^{(q)}_i = x_i + sum_j q_ji x_j` into `out`.
pub(crate) fn mutate_into(x: &[f64], q: &MutationRates, out: &mut [f64]) -> Result<()> {
    let d = q.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    for i in 0..d {
        let mut v = x[i];
        for (j, xj) in x.iter().enumerate() {
            v += q.q[j * d + i] * xj;
        }
        if v < -SIMPLEX_TOL {
            return Err(Error::NegativeCoordinate { index: i, value: v });
        }
        out[i] = v.max(0.0);
    }
    Ok(())
}

/// The mutated frequency vector `x^{(q_n)}`.
pub fn mutated_point(x: &SimplexPoint, qn: &MutationRates) -> Result<SimplexPoint> {
    let mut out = vec![0.0; x.dim()];
    mutate_into(x.coords(), qn, &mut out)?;
    SimplexPoint::new(out)
}

/// Boundary rows of the nearest-neighbour (Ohta-Kimura) model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OhtaKimuraBoundary {
    /// End rows keep their single neighbour; `q_ii = -theta d / (2n)`.
    #[default]
    Censored,
    /// The missing jump is redirected to the one neighbour; `q_ii = -theta d / n`.
    Reflecting,
    /// Values beyond the grid count as zero: end rows keep `q_ii = -theta d / n`
    /// and lose mass. Not a rate matrix; only available as a raw generator.
    Killing,
}

/// Nearest-neighbour rates on the Ohta-Kimura grid with the default boundary.
pub fn ohta_kimura(n: u64, d: usize, theta: f64) -> Result<MutationRates> {
    ohta_kimura_with(n, d, theta, OhtaKimuraBoundary::Censored)
}

pub fn ohta_kimura_with(
    n: u64,
    d: usize,
    theta: f64,
    boundary: OhtaKimuraBoundary,
) -> Result<MutationRates> {
    if boundary == OhtaKimuraBoundary::Killing {
        return Err(Error::InvalidRates(
            "the killing boundary has non-conservative rows".into(),
        ));
    }
    MutationRates::new_weak(d, ohta_kimura_matrix(n, d, theta, boundary)?)
}

fn ohta_kimura_matrix(
    n: u64,
    d: usize,
    theta: f64,
    boundary: OhtaKimuraBoundary,
) -> Result<Vec<f64>> {
    if d < 2 || n == 0 || theta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Ohta-Kimura needs d >= 2, n >= 1, theta > 0 (got d={d}, n={n}, theta={theta})"
        )));
    }
    let rate = theta * d as f64 / (2.0 * n as f64);
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        let neighbours: Vec<usize> = [i.checked_sub(1), (i + 1 < d).then_some(i + 1)]
            .into_iter()
            .flatten()
            .collect();
        let edge = neighbours.len() == 1;
        for &j in &neighbours {
            q[i * d + j] = if edge && boundary == OhtaKimuraBoundary::Reflecting {
                2.0 * rate
            } else {
                rate
            };
        }
        q[i * d + i] = match boundary {
            OhtaKimuraBoundary::Censored => -(neighbours.len() as f64) * rate,
            OhtaKimuraBoundary::Reflecting | OhtaKimuraBoundary::Killing => -2.0 * rate,
        };
    }
    Ok(q)
}

/// Uniform mutation: `q_ij = theta / (2n(d-1))` off the diagonal, `q_ii = -theta/(2n)`.
pub fn uniform_mutation(n: u64, d: usize, theta: f64) -> Result<MutationRates> {
    if d < 2 || n == 0 || theta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "uniform mutation needs d >= 2, n >= 1, theta > 0 (got d={d}, n={n}, theta={theta})"
        )));
    }
    let off = theta / (2.0 * n as f64 * (d as f64 - 1.0));
    let mut q = vec![off; d * d];
    for i in 0..d {
        q[i * d + i] = -theta / (2.0 * n as f64);
    }
    MutationRates::new(d, q)
}

/// A mutation operator acting on functions of one type variable `z`.
pub trait MutationOperator: Send + Sync {
    /// `(Q f)(z)`.
    fn apply(&self, f: &dyn Fn(f64) -> f64, z: f64) -> f64;
}

/// `Q f(z) = (theta / 2) * int_0^1 (f(y) - f(z)) dy` on `E = [0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct UniformMutationLimit {
    pub theta: f64,
}

impl MutationOperator for UniformMutationLimit {
    fn apply(&self, f: &dyn Fn(f64) -> f64, z: f64) -> f64 {
        let mean = adaptive_simpson(f, 0.0, 1.0, 1e-13);
        0.5 * self.theta * (mean - f(z))
    }
}

/// `Q f(z) = (theta / 2) f''(z)`; the second derivative uses a five-point
/// central stencil, exact for polynomials of degree at most five.
#[derive(Debug, Clone, Copy)]
pub struct OhtaKimuraLimit {
    pub theta: f64,
}

impl MutationOperator for OhtaKimuraLimit {
    fn apply(&self, f: &dyn Fn(f64) -> f64, z: f64) -> f64 {
        let h = 1e-2;
        let second = (-f(z + 2.0 * h) + 16.0 * f(z + h) - 30.0 * f(z) + 16.0 * f(z - h)
            - f(z - 2.0 * h))
            / (12.0 * h * h);
        0.5 * self.theta * second
    }
}

/// A finite generator matrix acting on grid values; `apply` is only
/// meaningful at grid points and returns NaN elsewhere.
#[derive(Debug, Clone)]
pub struct MatrixMutation {
    q: Vec<f64>,
    points: Vec<f64>,
}

impl MatrixMutation {
    pub fn new(q: Vec<f64>, grid: &Discretization) -> Result<Self> {
        let d = grid.len();
        if q.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: q.len(),
            });
        }
        Ok(Self {
            q,
            points: grid.points().to_vec(),
        })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }
}

impl MutationOperator for MatrixMutation {
    fn apply(&self, f: &dyn Fn(f64) -> f64, z: f64) -> f64 {
        let d = self.points.len();
        match self.points.iter().position(|p| (p - z).abs() <= 1e-12) {
            Some(i) => (0..d).map(|j| self.q[i * d + j] * f(self.points[j])).sum(),
            None => f64::NAN,
        }
    }
}

/// Named mutation models along a dimension schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum MutationModel {
    None,
    Uniform {
        theta: f64,
    },
    OhtaKimura {
        theta: f64,
        boundary: OhtaKimuraBoundary,
    },
    /// `q_n = q / n` for a fixed limit matrix `q` on the unit grid.
    Scaled {
        q: MutationRates,
    },
}

impl MutationModel {
    pub fn name(&self) -> &'static str {
        match self {
            MutationModel::None => "none",
            MutationModel::Uniform { .. } => "uniform",
            MutationModel::OhtaKimura { .. } => "ohta-kimura",
            MutationModel::Scaled { .. } => "scaled",
        }
    }

    pub fn theta(&self) -> f64 {
        match self {
            MutationModel::Uniform { theta } | MutationModel::OhtaKimura { theta, .. } => *theta,
            _ => 0.0,
        }
    }

    /// The per-generation rates `q_n` in dimension `d`; `None` when mutation-free.
    pub fn rates(&self, n: u64, d: usize) -> Result<Option<MutationRates>> {
        Ok(match self {
            MutationModel::None => None,
            MutationModel::Uniform { theta } => Some(uniform_mutation(n, d, *theta)?),
            MutationModel::OhtaKimura { theta, boundary } => {
                Some(ohta_kimura_with(n, d, *theta, *boundary)?)
            }
            MutationModel::Scaled { q } => {
                if q.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: q.dim(),
                        got: d,
                    });
                }
                Some(q.scaled(1.0 / n as f64))
            }
        })
    }

    /// The raw generator `Q_n - I` on the grid, row-major. Equals the rates
    /// except for the killing boundary.
    pub fn generator_matrix(&self, n: u64, d: usize) -> Result<Vec<f64>> {
        match self {
            MutationModel::OhtaKimura { theta, boundary } => {
                ohta_kimura_matrix(n, d, *theta, *boundary)
            }
            _ => Ok(self
                .rates(n, d)?
                .map(|q| q.as_slice().to_vec())
                .unwrap_or_else(|| vec![0.0; d * d])),
        }
    }

    pub fn grid(&self, d: usize) -> Result<Discretization> {
        match self {
            MutationModel::OhtaKimura { .. } => Ok(Discretization::ohta_kimura(d)),
            _ => Ok(Discretization::unit_interval(d)),
        }
    }

    /// The limit `n q_n` as a matrix on the `d`-point grid.
    pub fn limit_matrix(&self, d: usize) -> Result<Vec<f64>> {
        let n = 1_000_000u64;
        Ok(self
            .generator_matrix(n, d)?
            .into_iter()
            .map(|v| v * n as f64)
            .collect())
    }

    /// The continuum mutation operator on `E`; for the fixed-dimension model
    /// this is the limit matrix on the unit grid.
    pub fn limit_operator(&self, d: usize) -> Result<Arc<dyn MutationOperator>> {
        Ok(match self {
            MutationModel::Uniform { theta } => Arc::new(UniformMutationLimit { theta: *theta }),
            MutationModel::OhtaKimura { theta, .. } => Arc::new(OhtaKimuraLimit { theta: *theta }),
            MutationModel::None => Arc::new(MatrixMutation::new(vec![0.0; d * d], &self.grid(d)?)?),
            MutationModel::Scaled { q } => {
                Arc::new(MatrixMutation::new(q.as_slice().to_vec(), &self.grid(d)?)?)
            }
        })
    }
}

/// A mutation model paired with the dimension schedule `n -> d_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationSchedule {
    pub model: MutationModel,
    pub dims: DimensionSchedule,
}

impl MutationSchedule {
    pub fn new(model: MutationModel, dims: DimensionSchedule) -> Self {
        Self { model, dims }
    }

    pub fn dim(&self, n: u64) -> usize {
        self.dims.dim(n)
    }

    pub fn rates(&self, n: u64) -> Result<Option<MutationRates>> {
        self.model.rates(n, self.dim(n))
    }
}

/// Outcome of a finite-n check of one of the rate assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub name: String,
    pub ns: Vec<u64>,
    pub measured: Vec<f64>,
    /// Log-log slope of the quantity whose decay the assumption constrains
    /// (NaN when the measurements are identically zero).
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// The scalar compared against `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Whether every emitted matrix had strictly positive off-diagonal entries.
    pub strict_positivity: Option<bool>,
}

impl AssumptionReport {
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("assumption,n,measured,fitted_exponent,statistic,threshold,pass\n");
        for (n, m) in self.ns.iter().zip(&self.measured) {
            s.push_str(&format!(
                "{},{},{:e},{},{:e},{:e},{}\n",
                self.name, n, m, self.fitted_exponent, self.statistic, self.threshold, self.pass
            ));
        }
        s
    }
}

fn fit(ns: &[u64], ys: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    loglog_fit(&xs, ys)
        .map(|f| (f.slope, f.r_squared))
        .unwrap_or((f64::NAN, f64::NAN))
}

/// Checks `|q_ij^{(n)} - q_ij / n| <= C / n^gamma` over the sampled `n`.
///
/// The statistic is `sup_n n^gamma * max_ij |q_ij^{(n)} - q_ij/n|`; the check
/// passes when it is at most `c` and `q` is strictly positive off the diagonal.
pub fn check_q1(
    schedule: &dyn Fn(u64) -> Result<MutationRates>,
    q: &MutationRates,
    gamma: f64,
    ns: &[u64],
    c: f64,
) -> Result<AssumptionReport> {
    if gamma <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "gamma must exceed 1, got {gamma}"
        )));
    }
    let mut measured = Vec::with_capacity(ns.len());
    let mut strict = q.is_strict();
    for &n in ns {
        let qn = schedule(n)?;
        strict &= qn.is_strict();
        measured.push(qn.max_abs_diff(&q.scaled(1.0 / n as f64)));
    }
    let statistic = ns
        .iter()
        .zip(&measured)
        .map(|(&n, m)| (n as f64).powf(gamma) * m)
        .fold(0.0, f64::max);
    let (fitted_exponent, r_squared) = fit(ns, &measured);
    Ok(AssumptionReport {
        name: "Q1".into(),
        ns: ns.to_vec(),
        measured,
        fitted_exponent,
        r_squared,
        statistic,
        threshold: c,
        pass: q.is_strict() && statistic <= c * (1.0 + 1e-9),
        strict_positivity: Some(strict),
    })
}

/// Exponent that the bounding sequence `a_n` must beat.
pub const Q2_EXPONENT: f64 = -11.0 / 16.0;

/// Checks `max_ij q_ij^{(n)} <= C a_n` and that `a_n` decays faster than `n^{-11/16}`
/// (fitted log-log slope). Strict positivity is recorded, not enforced.
pub fn check_q2(
    schedule: &MutationSchedule,
    a: &dyn Fn(u64) -> f64,
    ns: &[u64],
    c: f64,
) -> Result<AssumptionReport> {
    let mut measured = Vec::with_capacity(ns.len());
    let mut strict = true;
    let mut statistic: f64 = 0.0;
    let mut an = Vec::with_capacity(ns.len());
    for &n in ns {
        let qn = schedule
            .rates(n)?
            .unwrap_or_else(|| MutationRates::zero(schedule.dim(n)));
        strict &= qn.is_strict();
        let m = qn.max_entry();
        let a_n = a(n);
        statistic = statistic.max(m / a_n);
        measured.push(m);
        an.push(a_n);
    }
    let (fitted_exponent, r_squared) = fit(ns, &an);
    Ok(AssumptionReport {
        name: "Q2".into(),
        ns: ns.to_vec(),
        measured,
        fitted_exponent,
        r_squared,
        statistic,
        threshold: c,
        pass: statistic <= c * (1.0 + 1e-9) && fitted_exponent < Q2_EXPONENT,
        strict_positivity: Some(strict),
    })
}

/// Options for [`check_q3`].
#[derive(Debug, Clone, Copy)]
pub struct Q3Options {
    /// Number of grid points dropped at each end before taking the sup.
    pub interior_margin: usize,
    /// The last measured deviation must be at most this.
    pub tolerance: f64,
}

impl Default for Q3Options {
    fn default() -> Self {
        Self {
            interior_margin: 0,
            tolerance: f64::INFINITY,
        }
    }
}

/// `sup_i |n (Q_n - I) beta (z_i) - Q beta (z_i)|` on the grid `E^{(d_n)}`.
pub fn q3_deviation(
    schedule: &MutationSchedule,
    limit: &dyn MutationOperator,
    beta: &dyn Fn(f64) -> f64,
    n: u64,
    interior_margin: usize,
) -> Result<f64> {
    let d = schedule.dim(n);
    let grid = schedule.model.grid(d)?;
    let qn = schedule.model.generator_matrix(n, d)?;
    let values: Vec<f64> = grid.points().iter().map(|&z| beta(z)).collect();
    let nf = n as f64;
    let lo = interior_margin.min(d);
    let hi = d.saturating_sub(interior_margin).max(lo);
    Ok((lo..hi)
        .map(|i| {
            let discrete: f64 = (0..d).map(|j| qn[i * d + j] * values[j]).sum::<f64>() * nf;
            (discrete - limit.apply(beta, grid.points()[i])).abs()
        })
        .fold(0.0, f64::max))
}

/// Measures the (Q3) deviation along `ns`; passes when the sequence is
/// non-increasing and its last value is within `opts.tolerance`.
pub fn check_q3(
    schedule: &MutationSchedule,
    limit: &dyn MutationOperator,
    beta: &dyn Fn(f64) -> f64,
    ns: &[u64],
    opts: Q3Options,
) -> Result<AssumptionReport> {
    let measured = ns
        .iter()
        .map(|&n| q3_deviation(schedule, limit, beta, n, opts.interior_margin))
        .collect::<Result<Vec<f64>>>()?;
    let monotone = measured.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let last = measured.last().copied().unwrap_or(0.0);
    let (fitted_exponent, r_squared) = fit(ns, &measured);
    let mut strict = true;
    for &n in ns {
        // the killing boundary has no rate matrix; it is not strictly positive either
        strict &= matches!(schedule.rates(n), Ok(Some(q)) if q.is_strict());
    }
    Ok(AssumptionReport {
        name: "Q3".into(),
        ns: ns.to_vec(),
        measured,
        fitted_exponent,
        r_squared,
        statistic: last,
        threshold: opts.tolerance,
        pass: monotone && last <= opts.tolerance,
        strict_positivity: Some(strict),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn zero_rates_leave_point_fixed() {
        let x = pt(&[0.1, 0.2, 0.7]);
        assert_eq!(mutated_point(&x, &MutationRates::zero(3)).unwrap(), x);
    }

    #[test]
    fn two_allele_substitution() {
        // x_1 = 1 + q_11 = 1 - 1/20, x_2 = q_12 = 1/20
        let n = 10.0;
        let r = 1.0 / (2.0 * n);
        let q = MutationRates::new(2, vec![-r, r, r, -r]).unwrap();
        let y = mutated_point(&pt(&[1.0, 0.0]), &q).unwrap();
        assert!((y.coords()[0] - 0.95).abs() < 1e-15);
        assert!((y.coords()[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn negative_coordinate_is_reported() {
        let q = MutationRates::new(2, vec![-2.0, 2.0, 1.0, -1.0]).unwrap();
        let err = mutated_point(&pt(&[1.0, 0.0]), &q).unwrap_err();
        assert!(matches!(err, Error::NegativeCoordinate { index: 0, .. }));
    }

    #[test]
    fn constructors_validate() {
        assert!(MutationRates::new(2, vec![-1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(MutationRates::new_weak(2, vec![-1.0, 1.0, 0.0, 0.0]).is_ok());
        assert!(MutationRates::new_weak(2, vec![-1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(MutationRates::new_weak(2, vec![1.0, -1.0, 1.0, -1.0]).is_err());
    }

    #[test]
    fn ohta_kimura_rates() {
        let q = ohta_kimura(100, 4, 2.0).unwrap();
        assert!((q.get(0, 1) - 0.04).abs() < 1e-15);
        assert!((q.get(1, 2) - 0.04).abs() < 1e-15);
        assert_eq!(q.get(0, 2), 0.0);
        assert!((q.get(1, 1) + 0.08).abs() < 1e-15);
        assert!((q.get(0, 0) + 0.04).abs() < 1e-15);
        assert!(!q.is_strict());
        for i in 0..4 {
            assert!((0..4).map(|j| q.get(i, j)).sum::<f64>().abs() < 1e-15);
        }
        let r = ohta_kimura_with(100, 4, 2.0, OhtaKimuraBoundary::Reflecting).unwrap();
        assert!((r.get(0, 1) - 0.08).abs() < 1e-15);
        assert!(ohta_kimura_with(100, 4, 2.0, OhtaKimuraBoundary::Killing).is_err());
    }

    #[test]
    fn uniform_rates() {
        let q = uniform_mutation(10, 3, 1.0).unwrap();
        assert!((q.get(0, 1) - 0.025).abs() < 1e-15);
        assert!((q.get(2, 2) + 0.05).abs() < 1e-15);
        assert!(q.is_strict());
    }

    #[test]
    fn csv_round_trip() {
        let q = uniform_mutation(10, 3, 1.0).unwrap();
        let text = q.to_csv(1.0, "uniform");
        assert!(text.starts_with("d,theta,model\n3,1,uniform\n"));
        let (back, theta, model) = MutationRates::from_csv(&text).unwrap();
        assert_eq!(back, q);
        assert_eq!(theta, 1.0);
        assert_eq!(model, "uniform");
    }

    #[test]
    fn q1_exact_schedule_passes() {
        let q = uniform_mutation(1, 3, 1.0).unwrap();
        let ns = [10, 20, 40, 80];
        let rep = check_q1(&|n| Ok(q.scaled(1.0 / n as f64)), &q, 2.0, &ns, 1e-12).unwrap();
        assert!(rep.pass);
        assert!(rep.measured.iter().all(|m| *m < 1e-18));
    }

    #[test]
    fn q1_second_order_perturbation_passes_with_unit_constant() {
        let q = MutationRates::new(2, vec![-1.0, 1.0, 0.5, -0.5]).unwrap();
        let ns = [10, 20, 40, 80, 160];
        let sched = |n: u64| {
            let nf = n as f64;
            let e = 1.0 / (nf * nf);
            MutationRates::from_off_diagonal(2, vec![0.0, 1.0 / nf + e, 0.5 / nf + e, 0.0], true)
        };
        let rep = check_q1(&sched, &q, 2.0, &ns, 1.0 + 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.statistic - 1.0).abs() < 1e-9);
        assert!((rep.fitted_exponent + 2.0).abs() < 1e-6);
    }

    #[test]
    fn q1_slow_schedule_fails() {
        let q = MutationRates::new(2, vec![-1.0, 1.0, 1.0, -1.0]).unwrap();
        let ns = [10, 100, 1000, 10_000];
        let rep = check_q1(
            &|n| Ok(q.scaled(1.0 / (n as f64).sqrt())),
            &q,
            1.5,
            &ns,
            10.0,
        )
        .unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn q2_for_example_models() {
        let ns: Vec<u64> = vec![512, 2048, 19683, 262_144, 1_953_125];
        let dims = DimensionSchedule::Root { k: 9 };
        let uni = MutationSchedule::new(MutationModel::Uniform { theta: 1.0 }, dims.clone());
        let rep = check_q2(&uni, &|n| 1.0 / n as f64, &ns, 0.5).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.strict_positivity, Some(true));

        let ok = MutationSchedule::new(
            MutationModel::OhtaKimura {
                theta: 1.0,
                boundary: OhtaKimuraBoundary::Censored,
            },
            dims.clone(),
        );
        let rep = check_q2(&ok, &|n| dims.dim(n) as f64 / n as f64, &ns, 0.5).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.strict_positivity, Some(false));

        let q = uniform_mutation(1, 3, 1.0).unwrap();
        let constant = MutationSchedule::new(
            MutationModel::Scaled { q: q.clone() },
            DimensionSchedule::Fixed(3),
        );
        // rates decaying only like 1/n cannot be dominated by a_n = 1/n^2
        let rep = check_q2(&constant, &|n| 1.0 / (n as f64 * n as f64), &ns, 1.0).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn q3_ohta_kimura_quadratic_is_exact_in_the_interior() {
        let sched = MutationSchedule::new(
            MutationModel::OhtaKimura {
                theta: 1.5,
                boundary: OhtaKimuraBoundary::Killing,
            },
            DimensionSchedule::Root { k: 9 },
        );
        let limit = OhtaKimuraLimit { theta: 1.5 };
        let beta = |z: f64| z * z;
        let ns = [512, 19683, 262_144];
        let rep = check_q3(
            &sched,
            &limit,
            &beta,
            &ns,
            Q3Options {
                interior_margin: 1,
                tolerance: 1e-9,
            },
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn q3_uniform_linear_beta() {
        let theta = 2.0;
        let sched = MutationSchedule::new(
            MutationModel::Uniform { theta },
            DimensionSchedule::Root { k: 9 },
        );
        let limit = UniformMutationLimit { theta };
        let beta = |z: f64| z;
        // n Q_n beta (i/d) = theta d / (2(d-1)) (mean - i/d); deviation from
        // (theta/2)(1/2 - z) is theta (1 - z) / (2(d-1)), largest at z = 1/d
        for n in [512u64, 19683, 262_144] {
            let d = sched.dim(n) as f64;
            let dev = q3_deviation(&sched, &limit, &beta, n, 0).unwrap();
            assert!((dev - theta / (2.0 * d)).abs() < 1e-12, "n={n}: {dev}");
        }
        let rep = check_q3(
            &sched,
            &limit,
            &beta,
            &[512, 19683, 262_144],
            Q3Options::default(),
        )
        .unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn q3_constant_beta_vanishes() {
        let sched = MutationSchedule::new(
            MutationModel::Uniform { theta: 1.0 },
            DimensionSchedule::Fixed(5),
        );
        let dev = q3_deviation(
            &sched,
            &UniformMutationLimit { theta: 1.0 },
            &|_| 3.0,
            100,
            0,
        )
        .unwrap();
        assert!(dev < 1e-13);
    }

    mod props {
        use super::super::*;
        use crate::simplex::random_simplex_points;
        use proptest::prelude::*;

        fn rates(d: usize, raw: &[f64], scale: f64) -> MutationRates {
            let off: Vec<f64> = raw.iter().map(|v| v * scale / d as f64).collect();
            MutationRates::from_off_diagonal(d, off, true).unwrap()
        }

        proptest! {
            #[test]
            fn mutated_point_stays_on_simplex(seed in any::<u64>(), raw in proptest::collection::vec(0.01f64..1.0, 16)) {
                let q = rates(4, &raw, 0.5);
                let x = random_simplex_points(4, 5, seed).pop().unwrap();
                let y = mutated_point(&x, &q).unwrap();
                prop_assert!((y.coords().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(y.coords().iter().all(|c| *c >= 0.0));
            }

            #[test]
            fn mutated_point_is_affine(seed in any::<u64>(), lambda in 0.0f64..1.0, raw in proptest::collection::vec(0.01f64..1.0, 9)) {
                let q = rates(3, &raw, 0.5);
                let mut pts = random_simplex_points(3, 5, seed);
                let a = pts.pop().unwrap();
                let b = pts.pop().unwrap();
                let mix: Vec<f64> = a.coords().iter().zip(b.coords()).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
                let lhs = mutated_point(&SimplexPoint::new(mix).unwrap(), &q).unwrap();
                let ya = mutated_point(&a, &q).unwrap();
                let yb = mutated_point(&b, &q).unwrap();
                for i in 0..3 {
                    let rhs = lambda * ya.coords()[i] + (1.0 - lambda) * yb.coords()[i];
                    prop_assert!((lhs.coords()[i] - rhs).abs() < 1e-14);
                }
            }
        }
    }
}
