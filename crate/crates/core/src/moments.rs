//! Central moments of the binomial distribution and the even-moment bound
//! `E[(S - nx)^{2 beta}] <= C n^beta`.

use rayon::prelude::*;

use crate::simplex::ln_factorial_table;
use crate::stats::{loglog_fit, CompensatedSum};

/// Largest `n` for direct summation.
pub const MAX_DIRECT_N: u64 = 10_000;

/// Largest log-log slope of the per-`n` maximum that still counts as stable.
pub const STABILITY_SLOPE: f64 = 0.05;

/// `E[(S - n x)^gamma]` for `S ~ Bin(n, x)`, by compensated summation over `k = 0..n`.
pub fn central_moment_binomial(n: u64, x: f64, gamma: u32) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    assert!(
        n <= MAX_DIRECT_N,
        "direct summation is limited to n <= {MAX_DIRECT_N}"
    );
    let mean = n as f64 * x;
    if x == 0.0 || x == 1.0 {
        return if gamma == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact = ln_factorial_table(n as u32);
    let (lx, ly) = (x.ln(), (-x).ln_1p());
    let mut acc = CompensatedSum::new();
    for k in 0..=n {
        let ln_p = ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
            + k as f64 * lx
            + (n - k) as f64 * ly;
        acc.add(ln_p.exp() * (k as f64 - mean).powi(gamma as i32));
    }
    acc.value()
}

/// The same moment from the recursion
/// `mu_{r+1} = p q (n r mu_{r-1} + d mu_r / dp)`, carried out on polynomials in `p`.
pub fn central_moment_recursion(n: u64, x: f64, gamma: u32) -> f64 {
    let nf = n as f64;
    // coefficient vectors in ascending powers of p
    let mut prev: Vec<f64> = vec![1.0];
    let mut cur: Vec<f64> = vec![0.0];
    if gamma == 0 {
        return 1.0;
    }
    for r in 1..gamma {
        let mut inner = vec![0.0; prev.len().max(cur.len())];
        for (i, c) in prev.iter().enumerate() {
            inner[i] += nf * r as f64 * c;
        }
        for (i, c) in cur.iter().enumerate().skip(1) {
            inner[i - 1] += i as f64 * c;
        }
        // multiply by p - p^2
        let mut next = vec![0.0; inner.len() + 2];
        for (i, c) in inner.iter().enumerate() {
            next[i + 1] += c;
            next[i + 2] -= c;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `n x (1-x) (1 - 6x + 6x^2 + 3nx - 3nx^2)`.
pub fn fourth_central_moment(n: u64, x: f64) -> f64 {
    let nf = n as f64;
    nf * x * (1.0 - x) * (1.0 - 6.0 * x + 6.0 * x * x + 3.0 * nf * x - 3.0 * nf * x * x)
}

/// Result of [`moment_bound_certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBound {
    pub beta: u32,
    /// `max_{n,x} E[(S - nx)^{2 beta}] / n^beta` over the sweep.
    pub constant: f64,
    /// Per-`n` maximum over the `x` grid.
    pub per_n: Vec<(u64, f64)>,
    /// Log-log slope of `per_n` against `n`.
    pub slope: f64,
    /// No growth trend: `slope <= STABILITY_SLOPE`.
    pub stable: bool,
}

/// Sweeps `E[(S - nx)^{2 beta}] / n^beta` and reports its maximum.
pub fn moment_bound_certify(beta: u32, ns: &[u64], xs: &[f64]) -> MomentBound {
    assert!(beta >= 1);
    let per_n: Vec<(u64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let m = xs
                .iter()
                .map(|&x| central_moment_binomial(n, x, 2 * beta) / (n as f64).powi(beta as i32))
                .fold(0.0, f64::max);
            (n, m)
        })
        .collect();
    let constant = per_n.iter().map(|p| p.1).fold(0.0, f64::max);
    let xs_n: Vec<f64> = per_n.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = per_n.iter().map(|p| p.1).collect();
    let slope = loglog_fit(&xs_n, &ys).map(|f| f.slope).unwrap_or(0.0);
    MomentBound {
        beta,
        constant,
        per_n,
        slope,
        stable: slope <= STABILITY_SLOPE,
    }
}

/// `max_{k=2..beta} k^{1 - k/(2 beta)} (n x (1-x))^{k/(2 beta)}`.
pub fn skorski_envelope(n: u64, x: f64, beta: u32) -> f64 {
    let var = n as f64 * x * (1.0 - x);
    let b2 = 2.0 * beta as f64;
    (2..=beta)
        .map(|k| {
            let k = k as f64;
            k.powf(1.0 - k / b2) * var.powf(k / b2)
        })
        .fold(0.0, f64::max)
}

/// Band the envelope ratio must stay in. Over `n` in `16..=4096`, `x` in
/// `0.1..=0.9` and `beta <= 5` the measured ratios lie in `[0.849, 1.046]`.
pub const SKORSKI_BAND: (f64, f64) = (0.75, 1.25);

/// Result of [`skorski_envelope_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkorskiReport {
    pub beta: u32,
    /// `(n, x, ratio)` for every swept pair.
    pub ratios: Vec<(u64, f64, f64)>,
    pub min: f64,
    pub max: f64,
    pub band: (f64, f64),
    pub pass: bool,
}

/// Ratio of `E[(S - nx)^{2 beta}]^{1/(2 beta)}` to [`skorski_envelope`] over
/// the sweep; degenerate `x` give ratio one.
pub fn skorski_envelope_check(beta: u32, ns: &[u64], xs: &[f64]) -> SkorskiReport {
    assert!(beta >= 2, "the envelope needs beta >= 2");
    let ratios: Vec<(u64, f64, f64)> = ns
        .par_iter()
        .flat_map_iter(|&n| {
            xs.iter().map(move |&x| {
                let env = skorski_envelope(n, x, beta);
                let ratio = if env == 0.0 {
                    1.0
                } else {
                    central_moment_binomial(n, x, 2 * beta).powf(1.0 / (2.0 * beta as f64)) / env
                };
                (n, x, ratio)
            })
        })
        .collect();
    let min = ratios.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let max = ratios.iter().map(|r| r.2).fold(0.0, f64::max);
    SkorskiReport {
        beta,
        ratios,
        min,
        max,
        band: SKORSKI_BAND,
        pass: min >= SKORSKI_BAND.0 && max <= SKORSKI_BAND.1,
    }
}

/// One row of a [`MomentTable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub n: u64,
    pub x: f64,
    pub beta: u32,
    /// `E[(S - nx)^{2 beta}]`.
    pub moment: f64,
    /// `moment / n^beta`.
    pub ratio: f64,
}

/// Even central moments over a sweep with the certified constant per `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
    pub constants: Vec<(u32, f64)>,
}

impl MomentTable {
    pub const CSV_HEADER: &'static str = "n,x,beta,moment,ratio";

    pub fn build(ns: &[u64], xs: &[f64], betas: &[u32]) -> Self {
        let mut rows = Vec::new();
        let mut constants = Vec::new();
        for &beta in betas {
            let mut c: f64 = 0.0;
            for &n in ns {
                for &x in xs {
                    let moment = central_moment_binomial(n, x, 2 * beta);
                    let ratio = moment / (n as f64).powi(beta as i32);
                    c = c.max(ratio);
                    rows.push(MomentRow {
                        n,
                        x,
                        beta,
                        moment,
                        ratio,
                    });
                }
            }
            constants.push((beta, c));
        }
        Self { rows, constants }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:e},{:e}\n",
                r.n, r.x, r.beta, r.moment, r.ratio
            ));
        }
        s
    }
}
