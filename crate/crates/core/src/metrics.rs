//! Sample-quality metrics: smoothed KL against an exact pmf, MMD with random
//! Fourier features, NLL, log RMSE, non-local jump rate and swap rate.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::math::{cos, ln, sqrt};
use crate::oracle::Pmf;
use crate::sampler::RunTrace;

/// Visit counts over the enumerated states of a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalHist {
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalHist {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("histogram needs at least one sample"));
        }
        Ok(EmpiricalHist { counts, total })
    }

    /// Counts of each state among flat samples of length `domain.dim()`.
    pub fn from_samples(domain: &DomainSpec, samples: &[usize]) -> Result<Self> {
        let n = domain.state_count();
        if n > (1u128 << 24) {
            return Err(Error::Capacity {
                states: n,
                limit: 1 << 24,
            });
        }
        let dim = domain.dim();
        if !samples.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: samples.len() % dim,
            });
        }
        let mut counts = vec![0u64; n as usize];
        for s in samples.chunks_exact(dim) {
            counts[domain.index_of_slice(s)] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_trace(domain: &DomainSpec, trace: &RunTrace) -> Result<Self> {
        Self::from_samples(domain, &trace.samples)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// `D_KL(π ‖ π̂)` with `π̂ = (counts + ε)/(total + εM)`, `ε = 1/total`.
pub fn kl_divergence(truth: &Pmf, empirical: &EmpiricalHist) -> Result<f64> {
    let m = empirical.counts.len();
    if truth.len() != m {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: m,
        });
    }
    let total = empirical.total as f64;
    let eps = 1.0 / total;
    let denom = total + eps * m as f64;
    let mut kl = 0.0;
    for (&p, &c) in truth.probs().iter().zip(&empirical.counts) {
        if p > 0.0 {
            kl += p * ln(p * denom / (c as f64 + eps));
        }
    }
    Ok(kl.max(0.0))
}

/// Random Fourier features `φ(x) = √(2/D) cos(Wx + b)` for the Gaussian
/// kernel of bandwidth `σ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffEstimator {
    dim: usize,
    num_features: usize,
    bandwidth: f64,
    frequencies: Vec<f64>,
    offsets: Vec<f64>,
}

impl RffEstimator {
    pub const DEFAULT_FEATURES: usize = 500;

    pub fn new<R: Rng + ?Sized>(dim: usize, num_features: usize, bandwidth: f64, rng: &mut R) -> Result<Self> {
        if dim == 0 || num_features == 0 {
            return Err(Error::invalid("feature map needs positive dimension and feature count"));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        let frequencies = (0..dim * num_features)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z / bandwidth
            })
            .collect();
        let offsets = (0..num_features)
            .map(|_| rng.random::<f64>() * core::f64::consts::TAU)
            .collect();
        Ok(RffEstimator {
            dim,
            num_features,
            bandwidth,
            frequencies,
            offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Mean feature vector of flat points with stride `dim`.
    pub fn mean_embedding(&self, points: &[f64]) -> Result<Vec<f64>> {
        if points.is_empty() || !points.len().is_multiple_of(self.dim) {
            return Err(Error::invalid("sample set is empty or not a multiple of the dimension"));
        }
        let n = points.len() / self.dim;
        let mut mu = vec![0.0; self.num_features];
        for x in points.chunks_exact(self.dim) {
            for (k, m) in mu.iter_mut().enumerate() {
                let w = &self.frequencies[k * self.dim..(k + 1) * self.dim];
                let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offsets[k];
                *m += cos(z);
            }
        }
        let scale = sqrt(2.0 / self.num_features as f64) / n as f64;
        mu.iter_mut().for_each(|m| *m *= scale);
        Ok(mu)
    }
}

/// Median pairwise Euclidean distance over the pooled points, using a
/// random subsample of at most `max_points`. Falls back to 1 when the
/// median is zero.
pub fn median_heuristic<R: Rng + ?Sized>(x: &[f64], y: &[f64], dim: usize, max_points: usize, rng: &mut R) -> Result<f64> {
    if dim == 0 || !x.len().is_multiple_of(dim) || !y.len().is_multiple_of(dim) {
        return Err(Error::invalid("sample sets must be multiples of the dimension"));
    }
    let nx = x.len() / dim;
    let total = nx + y.len() / dim;
    if total < 2 {
        return Err(Error::invalid("median heuristic needs at least two points"));
    }
    let point = |i: usize| if i < nx { &x[i * dim..(i + 1) * dim] } else { &y[(i - nx) * dim..(i - nx + 1) * dim] };
    let picks: Vec<usize> = if total > max_points {
        rand::seq::index::sample(rng, total, max_points).into_vec()
    } else {
        (0..total).collect()
    };
    let mut dists = Vec::with_capacity(picks.len() * (picks.len() - 1) / 2);
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            let d2: f64 = point(i).iter().zip(point(j)).map(|(p, q)| (p - q) * (p - q)).sum();
            dists.push(sqrt(d2));
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    Ok(if med > 0.0 { med } else { 1.0 })
}

/// `‖mean φ(X) − mean φ(Y)‖²` for flat embedded point sets.
pub fn mmd_rff(x: &[f64], y: &[f64], est: &RffEstimator) -> Result<f64> {
    let mx = est.mean_embedding(x)?;
    let my = est.mean_embedding(y)?;
    Ok(mx.iter().zip(&my).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// `−(1/n) Σ log π(sample)`; `+∞` if any sample has zero probability.
pub fn nll<'a, I>(truth: &Pmf, samples: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let domain = truth.domain();
    let mut acc = 0.0;
    let mut n = 0usize;
    for s in samples {
        if s.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: s.len(),
            });
        }
        let p = truth.prob_of(s);
        if p <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc -= ln(p);
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("nll needs at least one sample"));
    }
    Ok(acc / n as f64)
}

/// `ln √(mean (estimate − truth)²)`; `−∞` when the two agree exactly.
pub fn log_rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("log_rmse needs at least one entry"));
    }
    let mse = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64;
    Ok(if mse == 0.0 { f64::NEG_INFINITY } else { 0.5 * ln(mse) })
}

pub const DEFAULT_JUMP_THRESHOLD: f64 = 1.0;

/// Fraction of consecutive emitted samples whose embeddings are farther
/// apart than `threshold` in L2.
pub fn jump_rate(trace: &RunTrace, domain: &DomainSpec, threshold: f64) -> Result<f64> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::invalid("jump rate needs at least two samples"));
    }
    let t2 = threshold * threshold;
    let mut jumps = 0usize;
    let mut prev = domain.embed_unchecked(trace.sample(0));
    let mut cur = vec![0.0; domain.dim()];
    for i in 1..n {
        domain.embed_into(trace.sample(i), &mut cur);
        let d2: f64 = prev.iter().zip(&cur).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 > t2 {
            jumps += 1;
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(jumps as f64 / (n - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapRate {
    pub rate: f64,
    /// False for single-chain runs, whose rate is reported as 0.
    pub replica: bool,
}

/// Successful swaps per iteration.
pub fn swap_rate(trace: &RunTrace) -> SwapRate {
    if !trace.replica || trace.iterations() == 0 {
        return SwapRate {
            rate: 0.0,
            replica: trace.replica,
        };
    }
    SwapRate {
        rate: trace.swap_successes as f64 / trace.iterations() as f64,
        replica: true,
    }
}

/// Per-coordinate mean embedding of the first `n` emitted samples.
pub fn running_mean(trace: &RunTrace, domain: &DomainSpec, n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; domain.dim()];
    let n = n.min(trace.len());
    for i in 0..n {
        for (m, &k) in mean.iter_mut().zip(trace.sample(i)) {
            *m += domain.value(k);
        }
    }
    if n > 0 {
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    mean
}

/// `log_rmse` of the running mean embedding against `truth` after each
/// prefix length in `checkpoints`.
pub fn log_rmse_curve(trace: &RunTrace, domain: &DomainSpec, truth: &[f64], checkpoints: &[usize]) -> Result<Vec<f64>> {
    let dim = domain.dim();
    let mut sum = vec![0.0; dim];
    let mut taken = 0usize;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        let c = c.min(trace.len());
        while taken < c {
            for (s, &k) in sum.iter_mut().zip(trace.sample(taken)) {
                *s += domain.value(k);
            }
            taken += 1;
        }
        if taken == 0 {
            return Err(Error::invalid("checkpoint before the first sample"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / taken as f64).collect();
        out.push(log_rmse(&mean, truth)?);
    }
    Ok(out)
}
