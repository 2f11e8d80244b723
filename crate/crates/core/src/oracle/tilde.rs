use alloc::vec::Vec;

use super::{checked_count, Pmf, KERNEL_LIMIT, TARGET_LIMIT};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::math::{exp, exp_m1, log_sum_exp, softplus};
use crate::sampler::ChainParams;

/// `log Z_α(θ)` for every enumerated state of a log-quadratic model:
/// `log Σ_x exp[(U(x) − U(θ))/(2τ) − ½ (x−θ)ᵀ(I/α + (w/τ)J)(x−θ)]`.
/// The `x = θ` term is exactly 1, so the result is `log1p` of the
/// off-state mass and stays accurate when that mass is tiny.
pub fn log_z_alpha<M: EnergyModel + ?Sized>(model: &M, params: &ChainParams) -> Result<Vec<f64>> {
    let q = model
        .as_quadratic()
        .ok_or(Error::UnsupportedModel("the normalizer is defined for log-quadratic energies only"))?;
    let domain = q.domain();
    let n = checked_count(domain, KERNEL_LIMIT)?;
    let points: Vec<Vec<f64>> = (0..n).map(|i| domain.embed_unchecked(domain.state_from_index(i).indices())).collect();
    let energies: Vec<f64> = points.iter().map(|p| q.value_at(p)).collect();
    let (a, t, w) = (params.alpha, params.tau, q.strength());
    let mut terms = Vec::with_capacity(n);
    let mut d = alloc::vec![0.0; domain.dim()];
    let mut out = Vec::with_capacity(n);
    for (th, pt) in points.iter().enumerate() {
        terms.clear();
        for (x, px) in points.iter().enumerate() {
            if x == th {
                continue;
            }
            for ((di, &xi), &ti) in d.iter_mut().zip(px).zip(pt) {
                *di = xi - ti;
            }
            let sq: f64 = d.iter().map(|v| v * v).sum();
            let form = sq / a + (w / t) * q.coupling_form(&d);
            terms.push((energies[x] - energies[th]) / (2.0 * t) - 0.5 * form);
        }
        out.push(softplus(log_sum_exp(&terms)));
    }
    Ok(out)
}

/// `Z_α(θ)` for every enumerated state; see [`log_z_alpha`].
pub fn compute_z_alpha<M: EnergyModel + ?Sized>(model: &M, params: &ChainParams) -> Result<Vec<f64>> {
    Ok(log_z_alpha(model, params)?.into_iter().map(exp).collect())
}

/// `π̃(θ₁, θ₂) ∝ Z_{α₁}(θ₁) Z_{α₂}(θ₂) π₁(θ₁) π₂(θ₂)` with tempered
/// marginals `π_k ∝ exp(U/τ_k)`.
pub fn intermediate_pi_tilde<M: EnergyModel + ?Sized>(model: &M, low: &ChainParams, high: &ChainParams) -> Result<Pmf> {
    let domain = model.domain();
    let m = checked_count(domain, KERNEL_LIMIT)?;
    if m * m > TARGET_LIMIT {
        return Err(Error::Capacity {
            states: (m * m) as u128,
            limit: TARGET_LIMIT,
        });
    }
    let z1 = log_z_alpha(model, low)?;
    let z2 = log_z_alpha(model, high)?;
    let u: Vec<f64> = (0..m)
        .map(|i| model.value_at(&domain.embed_unchecked(domain.state_from_index(i).indices())))
        .collect();
    let mut logw = Vec::with_capacity(m * m);
    for x1 in 0..m {
        for x2 in 0..m {
            logw.push(z1[x1] + u[x1] / low.tau + z2[x2] + u[x2] / high.tau);
        }
    }
    Pmf::from_log_weights(domain.clone(), true, &logw)
}

/// `TV(π̃, π₁⊗π₂)` evaluated through `Z₁Z₂ − 1`, so differences far below
/// machine epsilon relative to 1 are still resolved.
pub fn pi_tilde_product_tv<M: EnergyModel + ?Sized>(model: &M, low: &ChainParams, high: &ChainParams) -> Result<f64> {
    let domain = model.domain();
    let m = checked_count(domain, KERNEL_LIMIT)?;
    let z1 = log_z_alpha(model, low)?;
    let z2 = log_z_alpha(model, high)?;
    let u: Vec<f64> = (0..m)
        .map(|i| model.value_at(&domain.embed_unchecked(domain.state_from_index(i).indices())))
        .collect();
    let l1: Vec<f64> = u.iter().map(|v| v / low.tau).collect();
    let l2: Vec<f64> = u.iter().map(|v| v / high.tau).collect();
    let (a1, a2) = (log_sum_exp(&l1), log_sum_exp(&l2));
    let p1: Vec<f64> = l1.iter().map(|l| exp(l - a1)).collect();
    let p2: Vec<f64> = l2.iter().map(|l| exp(l - a2)).collect();
    // π̃ = p (1 + ε) / (1 + ē) with ε = Z₁Z₂ − 1 and ē its mean under p.
    let mut eps = Vec::with_capacity(m * m);
    let mut mean = 0.0;
    for x1 in 0..m {
        for x2 in 0..m {
            let e = exp_m1(z1[x1] + z2[x2]);
            mean += p1[x1] * p2[x2] * e;
            eps.push(e);
        }
    }
    let mut tv = 0.0;
    for x1 in 0..m {
        for x2 in 0..m {
            tv += p1[x1] * p2[x2] * (eps[x1 * m + x2] - mean).abs();
        }
    }
    Ok(0.5 * tv / (1.0 + mean))
}
