//! The limiting Wright-Fisher semigroups: an exact oracle on polynomial
//! coefficients, an Euler-Maruyama reference integrator, and the Trotter
//! rate bound.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bernstein::{iterate, iterate_mc, iterate_polynomial, McEstimate, SimplexFunction};
use crate::error::{Error, Result};
use crate::generator::{generator_polynomial, generator_sup, hessian_lipschitz, rate_prefactor};
use crate::mutation::MutationRates;
use crate::polynomial::Polynomial;
use crate::simplex::{RngStream, SimplexPoint};
use crate::stats::{adaptive_simpson, mean_and_stderr};

/// Largest coefficient-space dimension accepted by [`build_oracle`].
pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Matrix exponential by scaling and squaring with a Pade approximant.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.exp()
}

/// The generator `A_d^{(q)}` as a matrix on coefficients of monomials of degree `<= m`.
///
/// Monomials are linearly dependent on the simplex, so only evaluated
/// functions are meaningful, not individual coefficients.
#[derive(Debug, Clone)]
pub struct PolynomialSemigroupOracle {
    d: usize,
    m: u32,
    q: Option<MutationRates>,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    matrix: DMatrix<f64>,
}

/// Assembles the oracle for polynomials of degree `<= m` in `d` variables.
pub fn build_oracle(
    d: usize,
    m: u32,
    q: Option<&MutationRates>,
) -> Result<PolynomialSemigroupOracle> {
    build_oracle_with_cap(d, m, q, DEFAULT_ORACLE_CAP)
}

pub fn build_oracle_with_cap(
    d: usize,
    m: u32,
    q: Option<&MutationRates>,
    cap: usize,
) -> Result<PolynomialSemigroupOracle> {
    if let Some(q) = q {
        if q.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.dim(),
            });
        }
    }
    let size = crate::simplex::lattice_size(d + 1, m);
    if size > cap as u128 {
        return Err(Error::CapExceeded {
            size: size.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let basis = Polynomial::basis(d, m);
    let index: HashMap<Vec<u32>, usize> = basis
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, e)| (e, i))
        .collect();
    let len = basis.len();
    let mut matrix = DMatrix::zeros(len, len);
    for (col, e) in basis.iter().enumerate() {
        let image = generator_polynomial(&Polynomial::monomial(d, e.clone(), 1.0), q);
        for (a, c) in image.terms() {
            matrix[(index[a], col)] = c;
        }
    }
    Ok(PolynomialSemigroupOracle {
        d,
        m,
        q: q.cloned(),
        basis,
        index,
        matrix,
    })
}

impl PolynomialSemigroupOracle {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree_cap(&self) -> u32 {
        self.m
    }

    pub fn rates(&self) -> Option<&MutationRates> {
        self.q.as_ref()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn coefficients(&self, p: &Polynomial) -> Result<DVector<f64>> {
        if p.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.dim(),
            });
        }
        if p.degree() > self.m {
            return Err(Error::InvalidArgument(format!(
                "degree {} exceeds the oracle cap {}",
                p.degree(),
                self.m
            )));
        }
        let mut v = DVector::zeros(self.basis.len());
        for (a, c) in p.terms() {
            v[self.index[a]] = c;
        }
        Ok(v)
    }

    pub fn polynomial(&self, coefficients: &DVector<f64>) -> Polynomial {
        Polynomial::from_terms(
            self.d,
            self.basis.iter().cloned().zip(coefficients.iter().copied()),
        )
    }

    /// `A p` through the matrix.
    pub fn generator(&self, p: &Polynomial) -> Result<Polynomial> {
        Ok(self.polynomial(&(&self.matrix * self.coefficients(p)?)))
    }

    /// `exp(t M)`.
    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        expm(&(&self.matrix * t))
    }

    /// `T_t p`, solving `du/dt = A u` with `u(0) = p` in coefficient space.
    pub fn exact_tt(&self, p: &Polynomial, t: f64) -> Result<Polynomial> {
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        let c = self.coefficients(p)?;
        if t == 0.0 {
            return Ok(p.clone());
        }
        Ok(self.polynomial(&(self.propagator(t) * c)))
    }
}

/// `T_t p` with a fresh oracle sized to `p`.
pub fn exact_tt(p: &Polynomial, t: f64, q: Option<&MutationRates>) -> Result<Polynomial> {
    build_oracle(p.dim(), p.degree(), q)?.exact_tt(p, t)
}

/// How negative coordinates are handled after an Euler-Maruyama step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Clip negatives to zero, then renormalize the sum to one.
    #[default]
    ClipRenormalize,
}

/// Euler-Maruyama settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMConfig {
    pub steps: usize,
    /// Shift used to factor the covariance; must lie in `(0, 1e-6]`.
    pub epsilon: f64,
    pub projection: Projection,
    pub paths: usize,
}

impl Default for EMConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            epsilon: 1e-12,
            projection: Projection::ClipRenormalize,
            paths: 10_000,
        }
    }
}

impl EMConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1e-6], got {}",
                self.epsilon
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("EM needs at least one step".into()));
        }
        Ok(())
    }
}

/// Symmetric square root of `diag(x) - x x^T`: eigendecompose the
/// `epsilon`-shifted matrix, remove the shift, clamp at zero.
fn covariance_sqrt(x: &[f64], epsilon: f64) -> DMatrix<f64> {
    let d = x.len();
    let cov = DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { x[i] } else { 0.0 };
        delta - x[i] * x[j] + if i == j { epsilon } else { 0.0 }
    });
    let eig = SymmetricEigen::new(cov);
    let roots = eig.eigenvalues.map(|l| (l - epsilon).max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// One Euler-Maruyama path of the Wright-Fisher diffusion on `[0, t]`,
/// `cfg.steps + 1` states including the start. `q` is the limit rate matrix.
pub fn em_simulate<R: RngCore + ?Sized>(
    x: &SimplexPoint,
    t: f64,
    q: Option<&MutationRates>,
    cfg: &EMConfig,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let d = x.dim();
    let dt = t / cfg.steps as f64;
    let sqrt_dt = dt.sqrt();
    let mut state = x.coords().to_vec();
    let mut path = Vec::with_capacity(cfg.steps + 1);
    path.push(state.clone());
    let mut noise = DVector::zeros(d);
    for _ in 0..cfg.steps {
        let sigma = covariance_sqrt(&state, cfg.epsilon);
        for z in noise.iter_mut() {
            *z = StandardNormal.sample(rng);
        }
        let diffusion = &sigma * &noise;
        let mut next: Vec<f64> = (0..d)
            .map(|i| {
                let drift = q.map_or(0.0, |q| (0..d).map(|j| q.get(j, i) * state[j]).sum());
                state[i] + drift * dt + diffusion[i] * sqrt_dt
            })
            .collect();
        match cfg.projection {
            Projection::ClipRenormalize => {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
                let s: f64 = next.iter().sum();
                next.iter_mut().for_each(|v| *v /= s);
            }
        }
        state = next;
        path.push(state.clone());
    }
    Ok(path)
}

/// Monte-Carlo mean of `f(X_t)` over `cfg.paths` Euler-Maruyama paths;
/// path `p` draws from `RngStream::new(seed, p)`.
pub fn em_expectation(
    f: &dyn SimplexFunction,
    x: &SimplexPoint,
    t: f64,
    q: Option<&MutationRates>,
    cfg: &EMConfig,
    seed: u64,
) -> Result<McEstimate> {
    cfg.validate()?;
    let values = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p as u64);
            let path = em_simulate(x, t, q, cfg, &mut rng)?;
            Ok(f.value(path.last().expect("path has a start")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, stderr) = mean_and_stderr(&values);
    Ok(McEstimate { estimate, stderr })
}

/// How `B^{floor(nt)} f` is evaluated in [`semigroup_error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationRoute {
    /// Dense lattice iteration.
    Lattice,
    /// Exact coefficient iteration (polynomials stay polynomials of the same degree).
    Polynomial,
    /// Chain simulation; the error then carries Monte-Carlo noise.
    MonteCarlo { paths: usize, seed: u64 },
}

/// `floor(n t)`, robust to `n t` landing just below an integer.
pub fn step_count(n: u32, t: f64) -> usize {
    (n as f64 * t + 1e-9).floor() as usize
}

/// `sup_x |B^{floor(nt)} f(x) - T_t f(x)|` over `grid`; `qn` drives the
/// operator and `q` the limit semigroup.
pub fn semigroup_error(
    f: &Polynomial,
    n: u32,
    t: f64,
    qn: Option<&MutationRates>,
    q: Option<&MutationRates>,
    grid: &[SimplexPoint],
    route: IterationRoute,
) -> Result<f64> {
    let tt = exact_tt(f, t, q)?;
    let steps = step_count(n, t);
    let iterated = match route {
        IterationRoute::Polynomial => Some(iterate_polynomial(f, n, steps, qn)?),
        _ => None,
    };
    let errors = grid
        .iter()
        .map(|x| {
            let lhs = match (&iterated, route) {
                (Some(p), _) => p.eval(x.coords()),
                (None, IterationRoute::MonteCarlo { paths, seed }) => {
                    iterate_mc(f, x, n, steps, qn, paths, seed)?.estimate
                }
                _ => iterate(f, x, n, steps, qn)?,
            };
            Ok((lhs - tt.eval(x.coords())).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}

/// `psi_n(g) = d^{5/2} / (16 * 3^{1/4}) * max_ij Lip(d_ij g) / sqrt(n)` with
/// the certified Lipschitz bound.
pub fn psi(g: &Polynomial, n: u32) -> f64 {
    rate_prefactor(g.dim()) * hessian_lipschitz(g, &[]).certified / (n as f64).sqrt()
}

/// Terms of the Trotter rate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterBound {
    pub value: f64,
    /// `sup |A f|` over the evaluation grid.
    pub generator_sup: f64,
    pub psi_f: f64,
    /// `int_0^t psi_n(T_s f) ds`.
    pub integral: f64,
    /// False when mutation is present: the Lipschitz-Hessian rate is then not
    /// backed by an explicit constant and the value is indicative only.
    pub proven: bool,
}

/// `(t/sqrt(n) + 1/n)(sup|A f| + psi_n(f)) + int_0^t psi_n(T_s f) ds`.
pub fn trotter_rate_bound(
    f: &Polynomial,
    n: u32,
    t: f64,
    q: Option<&MutationRates>,
    grid: &[SimplexPoint],
) -> Result<TrotterBound> {
    let oracle = build_oracle(f.dim(), f.degree(), q)?;
    let generator_sup = generator_sup(f, q, grid);
    let psi_f = psi(f, n);
    let integral = if f.degree() <= 2 || t == 0.0 {
        // quadratics stay quadratic, so every psi vanishes
        0.0
    } else {
        let mut failure = None;
        let v = adaptive_simpson(
            |s| match oracle.exact_tt(f, s) {
                Ok(g) => psi(&g, n),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            0.0,
            t,
            1e-6,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        v
    };
    let nf = n as f64;
    Ok(TrotterBound {
        value: (t / nf.sqrt() + 1.0 / nf) * (generator_sup + psi_f) + integral,
        generator_sup,
        psi_f,
        integral,
        proven: q.is_none(),
    })
}

/// One row of a semigroup rate study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub n: u32,
    pub t: f64,
    pub error: f64,
    pub bound: f64,
}

impl RateRow {
    pub const CSV_HEADER: &'static str = "n,t,error,bound,ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e}",
            self.n,
            self.t,
            self.error,
            self.bound,
            self.error / self.bound
        )
    }
}
