use alloc::vec;

use super::{enumerate_states, Kernel, KERNEL_LIMIT};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::math::exp;
use crate::sampler::{swap_prob_unchecked, ChainParams, Proposer, SwapConfig};

/// Exact one-step kernel of a single chain over all enumerated states, built
/// from the sampler's own proposal code. With `with_mh` the MH acceptance is
/// composed in and rejected mass returns to the diagonal.
pub fn exact_single_kernel<M: EnergyModel + ?Sized>(model: &M, params: &ChainParams, with_mh: bool) -> Result<Kernel> {
    let states = enumerate_states(model, KERNEL_LIMIT)?;
    let n = states.len();
    let levels = model.domain().levels();
    let mut proposer = Proposer::new(model, *params);
    let mut m = vec![0.0; n * n];
    for (x, from) in states.iter().enumerate() {
        let lp = proposer.coordinate_log_probs(from);
        let row = &mut m[x * n..(x + 1) * n];
        for (y, to) in states.iter().enumerate() {
            row[y] = to
                .state
                .indices()
                .iter()
                .enumerate()
                .map(|(d, &k)| lp[d * levels + k])
                .sum();
        }
    }
    if with_mh {
        for x in 0..n {
            for y in (x + 1)..n {
                let du = (states[y].energy - states[x].energy) / params.tau;
                let fwd = m[x * n + y];
                let rev = m[y * n + x];
                m[x * n + y] = exp(fwd.min(du + rev));
                m[y * n + x] = exp(rev.min(-du + fwd));
            }
        }
        for x in 0..n {
            let off: f64 = (0..n).filter(|&y| y != x).map(|y| m[x * n + y]).sum();
            m[x * n + x] = 1.0 - off;
        }
    } else {
        m.iter_mut().for_each(|v| *v = exp(*v));
    }
    Kernel::from_matrix(n, m)
}

/// Exact one-step kernel of the two-replica chain over state pairs: both
/// chains move by their single-chain kernels, then the pair is exchanged
/// with the swap probability evaluated on the new and previous energies.
pub fn exact_joint_kernel<M: EnergyModel + ?Sized>(
    model: &M,
    low: &ChainParams,
    high: &ChainParams,
    swap: &SwapConfig,
) -> Result<Kernel> {
    let states = enumerate_states(model, KERNEL_LIMIT)?;
    let m = states.len();
    let pairs = m * m;
    if pairs > KERNEL_LIMIT {
        return Err(Error::Capacity {
            states: pairs as u128,
            limit: KERNEL_LIMIT,
        });
    }
    let k1 = exact_single_kernel(model, low, low.mh)?;
    let k2 = exact_single_kernel(model, high, high.mh)?;
    let u: alloc::vec::Vec<f64> = states.iter().map(|s| s.energy).collect();
    let (t1, t2) = (low.tau, high.tau);
    let mut out = vec![0.0; pairs * pairs];
    for x1 in 0..m {
        for x2 in 0..m {
            let row = &mut out[(x1 * m + x2) * pairs..(x1 * m + x2 + 1) * pairs];
            for y1 in 0..m {
                for y2 in 0..m {
                    let stay = k1.get(x1, y1) * k2.get(x2, y2);
                    let s_stay = swap_prob_unchecked(swap, t1, t2, u[y1], u[y2], u[x1], u[x2]);
                    let cross = k1.get(x1, y2) * k2.get(x2, y1);
                    let s_cross = swap_prob_unchecked(swap, t1, t2, u[y2], u[y1], u[x1], u[x2]);
                    row[y1 * m + y2] = stay * (1.0 - s_stay) + cross * s_cross;
                }
            }
        }
    }
    Kernel::from_matrix(pairs, out)
}
