//! The limit generators `A_d` and `A_d^{(q)}`, their exact action on
//! polynomials, Voronovskaya residuals and the explicit rate constant.

use rayon::prelude::*;

use crate::bernstein::{BernsteinOperator, SimplexFunction};
use crate::error::{Error, Result};
use crate::mutation::MutationRates;
use crate::polynomial::Polynomial;
use crate::simplex::SimplexPoint;

/// Roundoff allowance when comparing a computed residual with its bound.
pub const RESIDUAL_ROUNDOFF: f64 = 1e-10;

/// `d^{5/2} / (16 * 3^{1/4})`.
pub fn rate_prefactor(d: usize) -> f64 {
    (d as f64).powf(2.5) / (16.0 * 3f64.powf(0.25))
}

fn check_dim(f: &dyn SimplexFunction, x: &SimplexPoint) -> Result<()> {
    if f.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: f.dim(),
        });
    }
    Ok(())
}

/// `(1/2) sum_ij x_i (delta_ij - x_j) d_ij f(x)`.
pub fn apply_a(f: &dyn SimplexFunction, x: &SimplexPoint) -> Result<f64> {
    check_dim(f, x)?;
    let h = f
        .hessian(x.coords())
        .ok_or(Error::MissingDerivative("Hessian"))?;
    let x = x.coords();
    let d = x.len();
    let mut acc = 0.0;
    for i in 0..d {
        acc += x[i] * h[i * d + i];
        for j in 0..d {
            acc -= x[i] * x[j] * h[i * d + j];
        }
    }
    Ok(0.5 * acc)
}

/// `apply_a(f, x) + sum_i (sum_j q_ji x_j) d_i f(x)`.
pub fn apply_aq(
    f: &dyn SimplexFunction,
    x: &SimplexPoint,
    q: Option<&MutationRates>,
) -> Result<f64> {
    let base = apply_a(f, x)?;
    let Some(q) = q else { return Ok(base) };
    if q.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: q.dim(),
        });
    }
    let g = f
        .gradient(x.coords())
        .ok_or(Error::MissingDerivative("gradient"))?;
    let x = x.coords();
    let d = x.len();
    let drift: f64 = (0..d)
        .map(|i| (0..d).map(|j| q.get(j, i) * x[j]).sum::<f64>() * g[i])
        .sum();
    Ok(base + drift)
}

/// `A_d p` (plus the mutation drift when `q` is given) as a polynomial.
///
/// On a monomial, `A x^a = (1/2) sum_i a_i (a_i - 1) x^{a - e_i} - (1/2)|a|(|a| - 1) x^a`
/// and the drift contributes `sum_ij q_ji a_i x^{a - e_i + e_j}`; neither raises the degree.
pub fn generator_polynomial(p: &Polynomial, q: Option<&MutationRates>) -> Polynomial {
    let d = p.dim();
    let mut out = Polynomial::zero(d);
    for (a, c) in p.terms() {
        let total: u32 = a.iter().sum();
        if total >= 2 {
            out.add_term(a.to_vec(), -0.5 * c * (total * (total - 1)) as f64);
        }
        for i in 0..d {
            if a[i] >= 2 {
                let mut e = a.to_vec();
                e[i] -= 1;
                out.add_term(e, 0.5 * c * (a[i] * (a[i] - 1)) as f64);
            }
            if let (Some(q), true) = (q, a[i] > 0) {
                for j in 0..d {
                    let rate = q.get(j, i);
                    if rate != 0.0 {
                        let mut e = a.to_vec();
                        e[i] -= 1;
                        e[j] += 1;
                        out.add_term(e, c * rate * a[i] as f64);
                    }
                }
            }
        }
    }
    out
}

/// Sup of `|A f|` (or `|A^{(q)} f|`) over `grid`.
pub fn generator_sup(p: &Polynomial, q: Option<&MutationRates>, grid: &[SimplexPoint]) -> f64 {
    let ap = generator_polynomial(p, q);
    grid.iter()
        .map(|x| ap.eval(x.coords()).abs())
        .fold(0.0, f64::max)
}

/// Bounds on `max_ij Lip(d_ij f)` over the simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    /// Upper bound from coefficient magnitudes: on `[0,1]^d`,
    /// `|d_k d_ij f| <= sum |coefficients|`.
    pub certified: f64,
    /// `max_ij sup |grad d_ij f|` over the evaluation grid (a lower estimate).
    pub grid_estimate: f64,
}

/// Lipschitz constants of the second partials of `p`.
pub fn hessian_lipschitz(p: &Polynomial, grid: &[SimplexPoint]) -> LipschitzBound {
    let d = p.dim();
    let mut certified: f64 = 0.0;
    let mut grid_estimate: f64 = 0.0;
    for i in 0..d {
        let di = p.partial(i);
        for j in i..d {
            let dij = di.partial(j);
            if dij.degree() == 0 {
                continue;
            }
            let third: Vec<Polynomial> = (0..d).map(|k| dij.partial(k)).collect();
            let cert = third
                .iter()
                .map(|t| t.coefficient_l1().powi(2))
                .sum::<f64>()
                .sqrt();
            certified = certified.max(cert);
            for x in grid {
                let norm = third
                    .iter()
                    .map(|t| t.eval(x.coords()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                grid_estimate = grid_estimate.max(norm);
            }
        }
    }
    LipschitzBound {
        certified,
        grid_estimate,
    }
}

/// `d^{5/2} / (16 * 3^{1/4}) * max_ij Lip(d_ij f) / sqrt(n)` with the certified Lipschitz bound.
pub fn rate_constant(p: &Polynomial, d: usize, n: u64) -> f64 {
    let lip = hessian_lipschitz(p, &[]).certified;
    rate_prefactor(d) * lip / (n as f64).sqrt()
}

/// `2 d exp(-n delta^4 / (2 d^2))`.
pub fn hoeffding_tail_bound(n: u64, d: usize, delta: f64) -> f64 {
    let d = d as f64;
    2.0 * d * (-(n as f64) * delta.powi(4) / (2.0 * d * d)).exp()
}

/// One row of a Voronovskaya study.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub n: u64,
    /// `sup_x |n (B f - f)(x) - A f(x)|` over the grid.
    pub residual: f64,
    pub grid_points: usize,
    /// Explicit bound, when one is available (mutation-free case).
    pub bound: Option<f64>,
    pub pass: bool,
}

impl ResidualReport {
    pub const CSV_HEADER: &'static str = "n,residual,bound,pass";

    pub fn csv_row(&self) -> String {
        let bound = self
            .bound
            .map(|b| format!("{b:e}"))
            .unwrap_or_else(|| "NA".into());
        format!("{},{:e},{},{}", self.n, self.residual, bound, self.pass)
    }
}

/// Voronovskaya residual by exact lattice application at every grid point.
///
/// `qn` is the per-generation rate matrix and `q` the limit matrix in the
/// drift; the explicit bound of the mutation-free case is attached when `f`
/// is a polynomial and `qn` is absent.
pub fn voronovskaya_residual(
    f: &dyn SimplexFunction,
    n: u32,
    grid: &[SimplexPoint],
    qn: Option<&MutationRates>,
    q: Option<&MutationRates>,
) -> Result<ResidualReport> {
    residual_with_bound(f, n, grid, qn, q, None)
}

/// [`voronovskaya_residual`] for a polynomial, with the explicit bound when `qn` is absent.
pub fn voronovskaya_residual_polynomial(
    p: &Polynomial,
    n: u32,
    grid: &[SimplexPoint],
    qn: Option<&MutationRates>,
    q: Option<&MutationRates>,
) -> Result<ResidualReport> {
    let bound = qn.is_none().then(|| rate_constant(p, p.dim(), n as u64));
    residual_with_bound(p, n, grid, qn, q, bound)
}

fn residual_with_bound(
    f: &dyn SimplexFunction,
    n: u32,
    grid: &[SimplexPoint],
    qn: Option<&MutationRates>,
    q: Option<&MutationRates>,
    bound: Option<f64>,
) -> Result<ResidualReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    if qn.is_some() && q.is_none() {
        return Err(Error::InvalidArgument(
            "a per-generation q_n needs its limit q".into(),
        ));
    }
    let op = BernsteinOperator::new(f.dim(), n, qn.cloned())?;
    let g = op.restrict(f)?;
    let residuals = grid
        .par_iter()
        .map(|x| {
            let bf = op.apply_grid(&g, x)?;
            let lhs = n as f64 * (bf - f.value(x.coords()));
            Ok((lhs - apply_aq(f, x, q)?).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let residual = residuals.into_iter().fold(0.0, f64::max);
    Ok(ResidualReport {
        n: n as u64,
        residual,
        grid_points: grid.len(),
        bound,
        pass: bound.is_none_or(|b| residual <= b + RESIDUAL_ROUNDOFF),
    })
}
