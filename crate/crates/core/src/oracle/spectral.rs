use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{detailed_balance_check, Kernel, Pmf};
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Eigen-decomposition of a symmetric matrix. `vectors` is row-major with
/// eigenvector `k` in column `k`; values are sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
    pub off_diagonal: f64,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sqrt(s)
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is at most
/// `tol`.
pub fn jacobi_eigen(matrix: &[f64], n: usize, tol: f64, max_sweeps: usize) -> Result<Eigen> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: matrix.len(),
        });
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut sweeps = 0;
    let mut off = off_norm(&a, n);
    while off > tol {
        if sweeps == max_sweeps {
            return Err(Error::Precondition(alloc::format!(
                "Jacobi iteration did not converge in {max_sweeps} sweeps (off-diagonal norm {off:e})"
            )));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_norm(&a, n);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = v[k * n + old];
        }
    }
    Ok(Eigen {
        values,
        vectors,
        sweeps,
        off_diagonal: off,
    })
}

/// Outcome of the spectral total-variation bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub dim: usize,
    pub n_max: usize,
    pub balance_residual: f64,
    pub eigenvalues: Vec<f64>,
    pub lambda0: f64,
    pub lambda_star: f64,
    pub reconstruction_error: f64,
    pub jacobi_sweeps: usize,
    /// `max_{x,n} (TV_n(x) − λ*ⁿ/(2√π(x)))`; non-positive when the bound holds.
    pub max_excess: f64,
    pub violations: usize,
    pub lambda0_ok: bool,
    pub passed: bool,
}

impl SpectralReport {
    /// Plain-text `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "balance_residual = {:e}", self.balance_residual);
        let _ = writeln!(s, "lambda0 = {:.15}", self.lambda0);
        let _ = writeln!(s, "lambda_star = {:.15}", self.lambda_star);
        let _ = writeln!(s, "reconstruction_error = {:e}", self.reconstruction_error);
        let _ = writeln!(s, "jacobi_sweeps = {}", self.jacobi_sweeps);
        let _ = write!(s, "eigenvalues =");
        for v in &self.eigenvalues {
            let _ = write!(s, " {v:.12}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "max_excess = {:e}", self.max_excess);
        let _ = writeln!(s, "violations = {}", self.violations);
        let _ = writeln!(s, "lambda0_check = {}", pass(self.lambda0_ok));
        let _ = writeln!(s, "tv_bound_check = {}", pass(self.violations == 0));
        s
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub const SPECTRAL_LIMIT: usize = 256;
const BALANCE_TOL: f64 = 1e-8;
const JACOBI_TOL: f64 = 1e-12;
const BOUND_SLACK: f64 = 1e-10;

/// Checks `‖qⁿ(·|x) − π‖_TV ≤ λ*ⁿ/(2√π(x))` for `n = 1..=n_max` using the
/// eigenvalues of the symmetrized kernel `D K D⁻¹`, `D = diag(√π)`.
pub fn spectral_tv_bound_check(kernel: &Kernel, pmf: &Pmf, n_max: usize) -> Result<SpectralReport> {
    let n = kernel.size();
    if n > SPECTRAL_LIMIT {
        return Err(Error::Capacity {
            states: n as u128,
            limit: SPECTRAL_LIMIT,
        });
    }
    let residual = detailed_balance_check(kernel, pmf)?;
    if !(residual <= BALANCE_TOL) {
        return Err(Error::Precondition(alloc::format!(
            "kernel is not reversible with respect to the pmf (residual {residual:e} > {BALANCE_TOL:e})"
        )));
    }
    let pi = pmf.probs();
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Precondition("pmf must be strictly positive".into()));
    }
    let root: Vec<f64> = pi.iter().map(|&p| sqrt(p)).collect();
    let mut sym = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            sym[x * n + y] = root[x] * kernel.get(x, y) / root[y];
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let m = 0.5 * (sym[x * n + y] + sym[y * n + x]);
            sym[x * n + y] = m;
            sym[y * n + x] = m;
        }
    }
    let eig = jacobi_eigen(&sym, n, JACOBI_TOL, 200)?;
    let mut recon: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r: f64 = (0..n).map(|k| eig.vectors[i * n + k] * eig.values[k] * eig.vectors[j * n + k]).sum();
            recon += (r - sym[i * n + j]) * (r - sym[i * n + j]);
        }
    }
    let lambda0 = eig.values[0];
    let lambda_star = if n > 1 {
        eig.values[1].max(eig.values[n - 1].abs())
    } else {
        0.0
    };
    let lambda0_ok = (lambda0 - 1.0).abs() <= BOUND_SLACK;
    let mut max_excess = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut dist = vec![0.0; n];
    let mut next = vec![0.0; n];
    for x in 0..n {
        dist.iter_mut().for_each(|d| *d = 0.0);
        dist[x] = 1.0;
        let mut lam = 1.0;
        for _ in 0..n_max {
            kernel.apply(&dist, &mut next);
            core::mem::swap(&mut dist, &mut next);
            lam *= lambda_star;
            let tv = 0.5 * dist.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
            let bound = lam / (2.0 * root[x]);
            max_excess = max_excess.max(tv - bound);
            if tv > bound + BOUND_SLACK {
                violations += 1;
            }
        }
    }
    Ok(SpectralReport {
        dim: n,
        n_max,
        balance_residual: residual,
        eigenvalues: eig.values,
        lambda0,
        lambda_star,
        reconstruction_error: sqrt(recon),
        jacobi_sweeps: eig.sweeps,
        max_excess,
        violations,
        lambda0_ok,
        passed: lambda0_ok && violations == 0,
    })
}
