//! Exact enumeration oracles for tiny state spaces: target distributions,
//! transition kernels, the intermediate distribution of the two-replica
//! chain, detailed-balance residuals and the spectral convergence bound.

use alloc::vec::Vec;

use crate::domain::DomainSpec;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::math::{exp, log_sum_exp};
use crate::sampler::ChainState;

mod gibbs;
mod kernel;
mod spectral;
mod tilde;

pub use gibbs::{block_gibbs_rbm_step, gibbs_sweep_quadratic, sample_hidden};
pub use kernel::{exact_joint_kernel, exact_single_kernel};
pub use spectral::{jacobi_eigen, spectral_tv_bound_check, Eigen, SpectralReport};
pub use tilde::{compute_z_alpha, intermediate_pi_tilde, log_z_alpha, pi_tilde_product_tv};

/// Largest state space [`enumerate_target`] accepts.
pub const TARGET_LIMIT: usize = 1 << 20;
/// Largest state space an exact kernel is built over.
pub const KERNEL_LIMIT: usize = 4096;

/// A probability mass function over enumerated states. For pair
/// distributions the index of `(x1, x2)` is `x1 * M + x2` where `M` is the
/// state count of `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    domain: DomainSpec,
    paired: bool,
    probs: Vec<f64>,
}

impl Pmf {
    /// Normalizes `log_weights` with log-sum-exp.
    pub fn from_log_weights(domain: DomainSpec, paired: bool, log_weights: &[f64]) -> Result<Self> {
        let m = checked_count(&domain, TARGET_LIMIT)?;
        let n = if paired { m * m } else { m };
        if log_weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: log_weights.len(),
            });
        }
        let lz = log_sum_exp(log_weights);
        if !lz.is_finite() {
            return Err(Error::NonFinite {
                what: "normalizer",
                state: Vec::new(),
            });
        }
        Ok(Pmf {
            domain,
            paired,
            probs: log_weights.iter().map(|&l| exp(l - lz)).collect(),
        })
    }

    pub fn from_probs(domain: DomainSpec, paired: bool, probs: Vec<f64>) -> Result<Self> {
        let m = checked_count(&domain, TARGET_LIMIT)?;
        let n = if paired { m * m } else { m };
        if probs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(alloc::format!("probabilities sum to {s}, not 1")));
        }
        Ok(Pmf { domain, paired, probs })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn is_paired(&self) -> bool {
        self.paired
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of a single-chain state given by level indices.
    pub fn prob_of(&self, indices: &[usize]) -> f64 {
        self.probs[self.domain.index_of_slice(indices)]
    }

    /// Product of two single-chain pmfs on the same domain.
    pub fn product(a: &Pmf, b: &Pmf) -> Result<Pmf> {
        if a.paired || b.paired || a.domain != b.domain {
            return Err(Error::invalid("product needs two single-chain pmfs on one domain"));
        }
        let probs = a
            .probs
            .iter()
            .flat_map(|&p| b.probs.iter().map(move |&q| p * q))
            .collect();
        Ok(Pmf {
            domain: a.domain.clone(),
            paired: true,
            probs,
        })
    }

    /// Marginals of a pair pmf: (first chain, second chain).
    pub fn pair_marginals(&self) -> Result<(Pmf, Pmf)> {
        if !self.paired {
            return Err(Error::invalid("marginals need a pair pmf"));
        }
        let m = self.domain.state_count() as usize;
        let mut first = alloc::vec![0.0; m];
        let mut second = alloc::vec![0.0; m];
        for (i, row) in self.probs.chunks_exact(m).enumerate() {
            for (j, &p) in row.iter().enumerate() {
                first[i] += p;
                second[j] += p;
            }
        }
        let mk = |probs| Pmf {
            domain: self.domain.clone(),
            paired: false,
            probs,
        };
        Ok((mk(first), mk(second)))
    }

    /// Per-coordinate expected embedded value.
    pub fn mean_embedding(&self) -> Vec<f64> {
        let dim = self.domain.dim();
        let mut mean = alloc::vec![0.0; dim];
        if self.paired {
            return mean;
        }
        for (i, &p) in self.probs.iter().enumerate() {
            let s = self.domain.state_from_index(i);
            for (m, &k) in mean.iter_mut().zip(s.indices()) {
                *m += p * self.domain.value(k);
            }
        }
        mean
    }
}

/// A dense row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n: usize,
    matrix: Vec<f64>,
}

impl Kernel {
    pub fn from_matrix(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        Ok(Kernel { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        let mut matrix = alloc::vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1.0;
        }
        Kernel { n, matrix }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.matrix[from * self.n..(from + 1) * self.n]
    }

    /// Largest `|Σ_y K(x, y) − 1|` over rows.
    pub fn max_row_sum_error(&self) -> f64 {
        self.matrix
            .chunks_exact(self.n.max(1))
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `dist · K`.
    pub fn apply(&self, dist: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &k) in out.iter_mut().zip(self.row(i)) {
                *o += p * k;
            }
        }
    }

    /// Stationary distribution by power iteration from uniform.
    pub fn stationary(&self, tol: f64, max_iter: usize) -> Vec<f64> {
        let mut cur = alloc::vec![1.0 / self.n as f64; self.n];
        let mut next = alloc::vec![0.0; self.n];
        for _ in 0..max_iter {
            self.apply(&cur, &mut next);
            let diff: f64 = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            core::mem::swap(&mut cur, &mut next);
            if diff < tol {
                break;
            }
        }
        cur
    }
}

pub(crate) fn checked_count(domain: &DomainSpec, limit: usize) -> Result<usize> {
    let n = domain.state_count();
    if n > limit as u128 {
        return Err(Error::Capacity { states: n, limit });
    }
    Ok(n as usize)
}

/// Cached position for every enumerated state.
pub(crate) fn enumerate_states<M: EnergyModel + ?Sized>(model: &M, limit: usize) -> Result<Vec<ChainState>> {
    let domain = model.domain();
    let m = checked_count(domain, limit)?;
    (0..m).map(|i| ChainState::new(model, domain.state_from_index(i))).collect()
}

/// `π ∝ exp(U)` by exhaustive enumeration.
pub fn enumerate_target<M: EnergyModel + ?Sized>(model: &M) -> Result<Pmf> {
    enumerate_tempered(model, 1.0)
}

/// `π^{1/τ} ∝ exp(U/τ)` by exhaustive enumeration.
pub fn enumerate_tempered<M: EnergyModel + ?Sized>(model: &M, tau: f64) -> Result<Pmf> {
    if !(tau > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let domain = model.domain();
    let m = checked_count(domain, TARGET_LIMIT)?;
    let mut logw = Vec::with_capacity(m);
    let mut x = alloc::vec![0.0; domain.dim()];
    for i in 0..m {
        let s = domain.state_from_index(i);
        domain.embed_into(s.indices(), &mut x);
        let u = model.value_at(&x);
        if !u.is_finite() {
            return Err(Error::NonFinite {
                what: "energy",
                state: s.into_inner(),
            });
        }
        logw.push(u / tau);
    }
    Pmf::from_log_weights(domain.clone(), false, &logw)
}

/// `max_{x,y} |p(x)K(x,y) − p(y)K(y,x)|`.
pub fn detailed_balance_check(kernel: &Kernel, pmf: &Pmf) -> Result<f64> {
    let n = kernel.size();
    if pmf.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pmf.len(),
        });
    }
    let p = pmf.probs();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((p[x] * kernel.get(x, y) - p[y] * kernel.get(y, x)).abs());
        }
    }
    Ok(worst)
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
