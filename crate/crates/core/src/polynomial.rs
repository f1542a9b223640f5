//! Multivariate polynomials in coefficient form.
//!
//! Used as the exactly-differentiable test class: derivatives, products and
//! linear substitutions are coefficient manipulations, no finite differences.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::bernstein::SimplexFunction;

/// Sparse polynomial in `d` variables; keys are exponent multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    d: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        Self::monomial(d, vec![0; d], c)
    }

    pub fn monomial(d: usize, exponents: Vec<u32>, coef: f64) -> Self {
        assert_eq!(exponents.len(), d, "exponent length must equal dimension");
        let mut p = Self::zero(d);
        p.add_term(exponents, coef);
        p
    }

    /// The coordinate function `e_i(x) = x_i` (zero-based `i`).
    pub fn coordinate(d: usize, i: usize) -> Self {
        let mut e = vec![0; d];
        e[i] = 1;
        Self::monomial(d, e, 1.0)
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, f64)>>(d: usize, terms: I) -> Self {
        let mut p = Self::zero(d);
        for (e, c) in terms {
            assert_eq!(e.len(), d);
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.d);
        }
        Self {
            d: self.d,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&a, &xi)| if a == 0 { 1.0 } else { xi.powi(a as i32) })
                    .product::<f64>()
            })
            .sum()
    }

    /// Partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.d);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * e[i] as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.d).map(|i| self.partial(i)).collect()
    }

    /// Row-major `d x d` matrix of second partials.
    pub fn hessian(&self) -> Vec<Polynomial> {
        let grad = self.gradient();
        let mut out = Vec::with_capacity(self.d * self.d);
        for gi in &grad {
            for j in 0..self.d {
                out.push(gi.partial(j));
            }
        }
        out
    }

    /// Sum of absolute coefficients: bounds `|p|` on `[0, 1]^d`, hence on the simplex.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Substitutes `x_i <- sum_j rows[i][j] * x_j` (row-major `d x d`).
    pub fn compose_linear(&self, rows: &[f64]) -> Self {
        let d = self.d;
        assert_eq!(rows.len(), d * d);
        let forms: Vec<Polynomial> = (0..d)
            .map(|i| {
                let mut p = Self::zero(d);
                for j in 0..d {
                    let mut e = vec![0; d];
                    e[j] = 1;
                    p.add_term(e, rows[i * d + j]);
                }
                p
            })
            .collect();
        let max_deg = self.degree() as usize;
        // powers[i][k] = forms[i]^k
        let powers: Vec<Vec<Polynomial>> = forms
            .iter()
            .map(|f| {
                let mut v = vec![Self::constant(d, 1.0)];
                for k in 1..=max_deg {
                    let next = &v[k - 1] * f;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(d);
        for (e, c) in &self.terms {
            let mut term = Self::constant(d, *c);
            for (i, &a) in e.iter().enumerate() {
                if a > 0 {
                    term = &term * &powers[i][a as usize];
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// All exponent multi-indices of total degree at most `m`, graded then lexicographic.
    pub fn basis(d: usize, m: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for deg in 0..=m {
            let mut cur = vec![0u32; d];
            push_compositions(&mut out, &mut cur, 0, deg);
        }
        out
    }
}

fn push_compositions(out: &mut Vec<Vec<u32>>, cur: &mut [u32], pos: usize, remaining: u32) {
    if pos == cur.len() - 1 {
        cur[pos] = remaining;
        out.push(cur.to_vec());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_compositions(out, cur, pos + 1, remaining - v);
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.d, rhs.d);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.d, rhs.d);
        let mut out = Polynomial::zero(self.d);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, a)?,
                }
            }
        }
        Ok(())
    }
}

impl SimplexFunction for Polynomial {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some((0..self.d).map(|i| self.partial(i).eval(x)).collect())
    }

    fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            Polynomial::hessian(self)
                .iter()
                .map(|p| p.eval(x))
                .collect(),
        )
    }
}
