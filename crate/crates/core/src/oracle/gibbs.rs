use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::domain::StateVector;
use crate::energy::{EnergyModel, QuadraticEnergy, RbmFreeEnergy};
use crate::error::{Error, Result};
use crate::math::{sigmoid, softmax_in_place};
use crate::rng::uniform;

/// `h_j ~ Bernoulli(σ((Wv + c)_j))` for an embedded visible vector.
pub fn sample_hidden<R: Rng + ?Sized>(rbm: &RbmFreeEnergy, v: &[f64], rng: &mut R) -> Vec<f64> {
    let mut h = vec![0.0; rbm.hidden()];
    rbm.hidden_input(v, &mut h);
    for x in h.iter_mut() {
        *x = if uniform(rng) < sigmoid(*x) { 1.0 } else { 0.0 };
    }
    h
}

/// One hidden-then-visible block-Gibbs update of an RBM.
pub fn block_gibbs_rbm_step<R: Rng + ?Sized>(rbm: &RbmFreeEnergy, visible: &StateVector, rng: &mut R) -> Result<StateVector> {
    let v = rbm.domain().embed(visible)?;
    let h = sample_hidden(rbm, &v, rng);
    let mut a = vec![0.0; rbm.visible()];
    rbm.visible_input(&h, &mut a);
    Ok(StateVector::new(a.iter().map(|&z| usize::from(uniform(rng) < sigmoid(z))).collect()))
}

/// One in-order single-site heat-bath sweep targeting `exp(U/τ)` for a
/// quadratic model; used to build reference chains where enumeration is
/// out of reach.
pub fn gibbs_sweep_quadratic<R: Rng + ?Sized>(
    model: &QuadraticEnergy,
    state: &mut StateVector,
    tau: f64,
    rng: &mut R,
) -> Result<()> {
    let domain = model.domain();
    domain.validate(state)?;
    if !(tau > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let n = domain.dim();
    let values = domain.values();
    let mut x = domain.embed(state)?;
    let w = model.strength();
    let mut logits = vec![0.0; values.len()];
    for i in 0..n {
        let field: f64 = (0..n).filter(|&j| j != i).map(|j| model.coupling_at(i, j) * x[j]).sum();
        let jii = model.coupling_at(i, i);
        for (l, &v) in logits.iter_mut().zip(&values) {
            *l = (w * (jii * v * v + 2.0 * v * field) + model.bias()[i] * v) / tau;
        }
        softmax_in_place(&mut logits);
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut k = values.len() - 1;
        for (j, &p) in logits.iter().enumerate() {
            acc += p;
            if u < acc {
                k = j;
                break;
            }
        }
        state.indices_mut()[i] = k;
        x[i] = values[k];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_stream;

    #[test]
    fn zero_rbm_is_fair_coin() {
        let rbm = RbmFreeEnergy::zeros(3, 4).unwrap();
        let mut rng = aux_stream(1);
        let mut s = StateVector::new(vec![0; 4]);
        let mut ones = 0usize;
        let n = 20_000;
        for _ in 0..n {
            s = block_gibbs_rbm_step(&rbm, &s, &mut rng).unwrap();
            ones += s.indices().iter().sum::<usize>();
        }
        let mean = ones as f64 / (4 * n) as f64;
        // SE = sqrt(0.25 / 80000) ≈ 0.0018
        assert!((mean - 0.5).abs() < 0.008);
    }

    #[test]
    fn strong_visible_bias() {
        let rbm = RbmFreeEnergy::new(vec![0.0; 2], vec![0.0; 2], vec![10.0]).unwrap();
        let mut rng = aux_stream(2);
        let s = StateVector::new(vec![0]);
        let hits = (0..10_000)
            .filter(|_| block_gibbs_rbm_step(&rbm, &s, &mut rng).unwrap().indices()[0] == 1)
            .count();
        assert!(hits >= 9_990);
    }
}
