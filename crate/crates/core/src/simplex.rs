//! Simplex geometry, the lattice of population states, multinomial
//! probabilities and reproducible random streams.

use std::cell::RefCell;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Membership tolerance for coordinates and for the coordinate sum.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Inputs whose coordinate sum is off by at most this much are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Default cap on the number of lattice states handled by exact routes.
pub const DEFAULT_LATTICE_CAP: u64 = 100_000_000;

/// A point of the probability simplex in `R^d`, `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates and, if the sum is off by at most [`RENORMALIZE_TOL`],
    /// renormalizes `coords`. Coordinates in `[-1e-12, 0)` are clamped to zero.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::NotOnSimplex(format!(
                "dimension {} is below 2",
                coords.len()
            )));
        }
        for (i, c) in coords.iter_mut().enumerate() {
            if !c.is_finite() || *c < -SIMPLEX_TOL {
                return Err(Error::NotOnSimplex(format!("coordinate {i} is {c}")));
            }
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let sum = coords.iter().copied().collect::<CompensatedSum>().value();
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::NotOnSimplex(format!("coordinates sum to {sum}")));
        }
        if sum != 1.0 {
            coords.iter_mut().for_each(|c| *c /= sum);
        }
        Ok(Self { coords })
    }

    pub fn vertex(d: usize, i: usize) -> Self {
        assert!(d >= 2 && i < d);
        let mut coords = vec![0.0; d];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn barycenter(d: usize) -> Self {
        assert!(d >= 2);
        Self {
            coords: vec![1.0 / d as f64; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_vertex(&self) -> bool {
        self.coords.iter().filter(|c| **c > 0.0).count() == 1
    }
}

impl From<&LatticeIndex> for SimplexPoint {
    fn from(k: &LatticeIndex) -> Self {
        let n = k.n() as f64;
        SimplexPoint {
            coords: k.counts().iter().map(|&c| c as f64 / n).collect(),
        }
    }
}

/// A state `k` of the Wright-Fisher chain: `d` allele counts summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeIndex {
    counts: Vec<u32>,
}

impl LatticeIndex {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidArgument("lattice index needs d >= 2".into()));
        }
        if counts.iter().map(|&c| c as u64).sum::<u64>() == 0 {
            return Err(Error::InvalidArgument("lattice index needs n >= 1".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// The frequency vector `k / n`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Number of lattice states `C(n + d - 1, d - 1)`; saturates at `u128::MAX`.
pub fn lattice_size(d: usize, n: u32) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..d as u128 {
        acc = match acc.checked_mul(n as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// The full lattice `{k : |k| = n}` in lexicographic order of `(k_1, ..., k_d)`,
/// stored flat. Every grid function indexes into this order.
#[derive(Debug, Clone)]
pub struct Lattice {
    d: usize,
    n: u32,
    counts: Vec<u32>,
}

impl Lattice {
    pub fn new(d: usize, n: u32) -> Result<Self> {
        Self::with_cap(d, n, DEFAULT_LATTICE_CAP)
    }

    pub fn with_cap(d: usize, n: u32, cap: u64) -> Result<Self> {
        if d < 2 || n < 1 {
            return Err(Error::InvalidArgument(format!(
                "lattice needs d >= 2 and n >= 1, got d={d}, n={n}"
            )));
        }
        let size = lattice_size(d, n);
        if size > cap as u128 {
            return Err(Error::LatticeTooLarge { size, cap });
        }
        let mut counts = Vec::with_capacity(size as usize * d);
        let mut current = vec![0u32; d];
        fill_lex(&mut counts, &mut current, 0, n);
        debug_assert_eq!(counts.len(), size as usize * d);
        Ok(Self { d, n, counts })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Counts of the state at position `idx`.
    pub fn state(&self, idx: usize) -> &[u32] {
        &self.counts[idx * self.d..(idx + 1) * self.d]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.counts.chunks_exact(self.d)
    }

    pub fn index(&self, idx: usize) -> LatticeIndex {
        LatticeIndex {
            counts: self.state(idx).to_vec(),
        }
    }

    /// Frequency vector `k / n` of the state at position `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let n = self.n as f64;
        self.state(idx).iter().map(|&c| c as f64 / n).collect()
    }

    /// Position of `counts` in the lattice order.
    pub fn rank(&self, counts: &[u32]) -> Option<usize> {
        if counts.len() != self.d || counts.iter().sum::<u32>() != self.n {
            return None;
        }
        let mut rank: u128 = 0;
        let mut remaining = self.n;
        for (i, &k) in counts.iter().enumerate().take(self.d - 1) {
            let parts_after = self.d - i - 1;
            for v in 0..k {
                rank += lattice_size(parts_after, remaining - v);
            }
            remaining -= k;
        }
        Some(rank as usize)
    }
}

fn fill_lex(out: &mut Vec<u32>, current: &mut [u32], pos: usize, remaining: u32) {
    let d = current.len();
    if pos == d - 1 {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for v in 0..=remaining {
        current[pos] = v;
        fill_lex(out, current, pos + 1, remaining - v);
    }
}

/// Every `k` with `|k| = n`, in lexicographic order of `(k_1, ..., k_d)`.
pub fn enumerate_lattice(d: usize, n: u32) -> Result<Vec<LatticeIndex>> {
    let lattice = Lattice::new(d, n)?;
    Ok((0..lattice.len()).map(|i| lattice.index(i)).collect())
}

thread_local! {
    static LN_FACTORIAL: RefCell<Vec<f64>> = RefCell::new(vec![0.0]);
}

/// Table of `ln(k!)` for `k = 0..=n`, accumulated with compensation.
pub fn ln_factorial_table(n: u32) -> Vec<f64> {
    LN_FACTORIAL.with(|cell| {
        let mut table = cell.borrow_mut();
        if table.len() <= n as usize {
            let mut acc = CompensatedSum::new();
            let mut fresh = Vec::with_capacity(n as usize + 1);
            fresh.push(0.0);
            for k in 1..=n {
                acc.add((k as f64).ln());
                fresh.push(acc.value());
            }
            *table = fresh;
        }
        table[..=n as usize].to_vec()
    })
}

/// Log of the multinomial probability with the convention `0 * ln 0 = 0`.
/// Returns `-inf` for impossible outcomes.
#[inline]
pub(crate) fn ln_multinomial(ln_fact: &[f64], n: u32, ln_x: &[f64], k: &[u32]) -> f64 {
    let mut acc = ln_fact[n as usize];
    for (&ki, &lx) in k.iter().zip(ln_x) {
        if ki > 0 {
            if lx == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc += ki as f64 * lx - ln_fact[ki as usize];
        }
    }
    acc
}

/// `n! / (k_1! ... k_d!) * prod x_i^{k_i}`, computed in log space.
pub fn multinomial_pmf(x: &SimplexPoint, k: &LatticeIndex) -> Result<f64> {
    if x.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: k.dim(),
        });
    }
    let n = k.n();
    let table = ln_factorial_table(n);
    let ln_x: Vec<f64> = x.coords().iter().map(|v| v.ln()).collect();
    Ok(ln_multinomial(&table, n, &ln_x, k.counts()).exp())
}

/// A reproducible random stream identified by `(master seed, stream index)`.
///
/// Backed by ChaCha8 with the stream index mapped onto the cipher's stream
/// counter, so distinct indices never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws one multinomial sample by sequential binomial decomposition.
///
/// `probs` must be nonnegative and sum to one (not re-checked here).
pub fn sample_multinomial_into<R: RngCore + ?Sized>(
    probs: &[f64],
    n: u32,
    rng: &mut R,
    out: &mut [u32],
) {
    let d = probs.len();
    let mut remaining = n as u64;
    let mut mass = 1.0f64;
    for i in 0..d {
        if i == d - 1 || remaining == 0 {
            out[i] = remaining as u32;
            out[i + 1..].iter_mut().for_each(|v| *v = 0);
            return;
        }
        let p = if mass > 0.0 {
            (probs[i] / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = if p >= 1.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p)
                .expect("binomial parameters are valid")
                .sample(rng)
        };
        out[i] = k as u32;
        remaining -= k;
        mass -= probs[i];
    }
}

pub fn sample_multinomial<R: RngCore + ?Sized>(
    x: &SimplexPoint,
    n: u32,
    rng: &mut R,
) -> LatticeIndex {
    let mut counts = vec![0u32; x.dim()];
    sample_multinomial_into(x.coords(), n, rng, &mut counts);
    LatticeIndex { counts }
}

/// The barycentric grid `{k / m : |k| = m}` used for sup-norm estimates.
pub fn simplex_grid(d: usize, m: u32) -> Result<Vec<SimplexPoint>> {
    let lattice = Lattice::new(d, m)?;
    Ok((0..lattice.len())
        .map(|i| SimplexPoint {
            coords: lattice.point(i),
        })
        .collect())
}

/// `count` points drawn uniformly from the simplex (flat Dirichlet), plus
/// the `d` vertices first. Deterministic in `seed`.
pub fn random_simplex_points(d: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    use rand_distr::Exp1;
    let mut rng = RngStream::new(seed, 0);
    let mut pts: Vec<SimplexPoint> = (0..d.min(count))
        .map(|i| SimplexPoint::vertex(d, i))
        .collect();
    while pts.len() < count {
        let e: Vec<f64> = (0..d).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = e.iter().sum();
        pts.push(SimplexPoint {
            coords: e.iter().map(|v| v / s).collect(),
        });
    }
    pts
}
