//! Subsample selection and resample-count generation.
//!
//! Every random draw comes from an [`RngStream`] keyed by a [`SeedTuple`], so a
//! given (master seed, purpose, subsample, resample) always yields the same
//! numbers no matter which thread asks for them or in which order.

use std::fmt;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Partition,
    Subsample,
    Resample,
    Dataset,
    Realization,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Partition => 0x7061_7274,
            Purpose::Subsample => 0x7375_6273,
            Purpose::Resample => 0x7265_7361,
            Purpose::Dataset => 0x6461_7461,
            Purpose::Realization => 0x7265_616c,
        }
    }
}

/// Identifies one random stream; printed in error messages so a failing
/// resample can be replayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTuple {
    pub master: u64,
    pub purpose: Purpose,
    pub subsample: u64,
    pub resample: u64,
}

impl SeedTuple {
    pub fn new(master: u64, purpose: Purpose, subsample: u64, resample: u64) -> Self {
        Self { master, purpose, subsample, resample }
    }
}

impl fmt::Display for SeedTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(seed={}, purpose={:?}, subsample={}, resample={})",
            self.master, self.purpose, self.subsample, self.resample
        )
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic counter-keyed random stream. Not shareable across threads;
/// derive a new one per unit of work instead.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: SeedTuple) -> Self {
        let mut state = seed.master;
        for word in [seed.purpose.tag(), seed.subsample, seed.resample] {
            state = splitmix64(&mut state) ^ word;
        }
        state = splitmix64(&mut state);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { inner: ChaCha8Rng::from_seed(key) }
    }

    pub fn from_parts(master: u64, purpose: Purpose, subsample: u64, resample: u64) -> Self {
        Self::new(SeedTuple::new(master, purpose, subsample, resample))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Distinct row indices in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSubset(Vec<usize>);

impl IndexSubset {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(invalid(format!("index {i} repeated or outside [0, {n})")));
            }
        }
        Ok(Self(indices))
    }

    /// `0..n` in order.
    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A nominal-size resample stored as `(row, count)` pairs over at most `b`
/// distinct rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedResample {
    pub rows: Vec<usize>,
    pub counts: Vec<u64>,
    pub nominal_size: usize,
}

impl WeightedResample {
    /// Pairs `base` with `counts`, dropping rows drawn zero times.
    pub fn from_counts(base: &[usize], counts: &[u64], nominal_size: usize) -> Self {
        let (rows, counts) = base
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&i, &c)| (i, c))
            .unzip();
        Self { rows, counts, nominal_size }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// A random permutation of `0..n` cut into consecutive slots of size `b`.
#[derive(Debug, Clone)]
pub struct Partition {
    order: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, master_seed: u64) -> Self {
        let mut rng = RngStream::from_parts(master_seed, Purpose::Partition, 0, 0);
        Self { order: index::sample(&mut rng, n, n).into_vec() }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a> {
    Uniform,
    /// 1-based slot `slot` of the partition.
    Disjoint { partition: &'a Partition, slot: usize },
}

pub fn draw_subsample(n: usize, b: usize, mode: Sampling<'_>, rng: &mut RngStream) -> Result<IndexSubset> {
    if b == 0 || b > n {
        return Err(invalid(format!("subsample size b={b} must lie in [1, n={n}]")));
    }
    match mode {
        Sampling::Uniform => Ok(IndexSubset(index::sample(rng, n, b).into_vec())),
        Sampling::Disjoint { partition, slot } => {
            if partition.n() != n {
                return Err(invalid("partition built for a different n"));
            }
            if slot == 0 || slot * b > n {
                return Err(Error::PartitionExhausted { slot, b, n, needed: slot * b });
            }
            Ok(IndexSubset(partition.order[(slot - 1) * b..slot * b].to_vec()))
        }
    }
}

/// `Multinomial(n, 1_b / b)` by sequential conditional binomials: `O(b)` work
/// regardless of `n`.
pub fn multinomial_counts(n: u64, b: usize, rng: &mut RngStream) -> Result<Vec<u64>> {
    if n == 0 || b == 0 {
        return Err(invalid(format!("multinomial needs n ≥ 1 and b ≥ 1 (n={n}, b={b})")));
    }
    let mut counts = Vec::with_capacity(b);
    let mut remaining = n;
    for cell in 0..b - 1 {
        if remaining == 0 {
            counts.push(0);
            continue;
        }
        let p = 1.0 / (b - cell) as f64;
        let draw = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
        counts.push(draw);
        remaining -= draw;
    }
    counts.push(remaining);
    Ok(counts)
}

/// `n` independent Poisson(1) counts.
pub fn poisson_counts(n: usize, rng: &mut RngStream) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid("poisson_counts needs n ≥ 1"));
    }
    let poisson = Poisson::new(1.0).expect("valid rate");
    Ok((0..n).map(|_| poisson.sample(rng) as u64).collect())
}

/// `b` draws with replacement from `0..n`, aggregated into distinct rows with
/// multiplicities (rows ascending).
pub fn draw_with_replacement(n: usize, b: usize, rng: &mut RngStream) -> Result<WeightedResample> {
    if b == 0 || b > n {
        return Err(invalid(format!("resample size b={b} must lie in [1, n={n}]")));
    }
    let mut picks: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
    picks.sort_unstable();
    let mut rows = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for i in picks {
        if rows.last() == Some(&i) {
            *counts.last_mut().unwrap() += 1;
        } else {
            rows.push(i);
            counts.push(1);
        }
    }
    Ok(WeightedResample { rows, counts, nominal_size: b })
}

/// Contiguous block `{t, …, t+b−1}` with `t` uniform on `[0, n−b]`.
pub fn draw_block_subsample(n: usize, b: usize, rng: &mut RngStream) -> Result<IndexSubset> {
    if b == 0 || b > n {
        return Err(invalid(format!("block size b={b} must lie in [1, n={n}]")));
    }
    let start = rng.random_range(0..=n - b);
    Ok(IndexSubset((start..start + b).collect()))
}

fn stationary_walk(b: usize, n: usize, p: f64, rng: &mut RngStream, mut visit: impl FnMut(usize)) -> Result<()> {
    if b == 0 || n == 0 {
        return Err(invalid(format!("stationary resample needs b ≥ 1 and n ≥ 1 (b={b}, n={n})")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("restart probability p={p} must lie in (0, 1]")));
    }
    let mut cur = rng.random_range(0..b);
    visit(cur);
    for _ in 1..n {
        cur = if rng.random::<f64>() < p { rng.random_range(0..b) } else { (cur + 1) % b };
        visit(cur);
    }
    Ok(())
}

/// Stationary-bootstrap index sequence of length `n` into a series of length
/// `b`: continue circularly with probability `1 − p`, jump uniformly otherwise.
pub fn stationary_resample(b: usize, n: usize, p: f64, rng: &mut RngStream) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    stationary_walk(b, n, p, rng, |i| out.push(i))?;
    Ok(out)
}

/// Visit counts of [`stationary_resample`] per subsample position, using
/// `O(b)` memory. Consumes the stream identically.
pub fn stationary_counts(b: usize, n: usize, p: f64, rng: &mut RngStream) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; b];
    stationary_walk(b, n, p, rng, |i| counts[i] += 1)?;
    Ok(counts)
}
