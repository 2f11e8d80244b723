use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::ChainParams;
use crate::domain::{DomainKind, StateVector};
use crate::energy::{energy_value, EnergyModel};
use crate::error::{Error, Result};
use crate::math::{exp, ln, sigmoid};
use crate::rng::uniform;

/// A chain position with its embedding, energy and gradient cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub state: StateVector,
    pub point: Vec<f64>,
    pub energy: f64,
    pub gradient: Vec<f64>,
}

impl ChainState {
    pub fn new<M: EnergyModel + ?Sized>(model: &M, state: StateVector) -> Result<Self> {
        let point = model.domain().embed(&state)?;
        Self::from_parts(model, state, point)
    }

    fn from_parts<M: EnergyModel + ?Sized>(model: &M, state: StateVector, point: Vec<f64>) -> Result<Self> {
        let energy = model.value_at(&point);
        let mut gradient = vec![0.0; point.len()];
        model.gradient_at(&point, &mut gradient);
        if !energy.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "energy or gradient",
                state: state.into_inner(),
            });
        }
        Ok(ChainState {
            state,
            point,
            energy,
            gradient,
        })
    }
}

/// Result of one proposal draw. Before any MH decision `state == proposal`
/// and `accepted` is true.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub proposal: StateVector,
    pub forward_logq: f64,
    pub reverse_logq: f64,
    pub accepted: bool,
}

/// Unnormalized log-probabilities of moving one coordinate to each value:
/// `g·(v − x)/(2τ) − (v − x)²/(2α)`.
#[inline]
pub(crate) fn coord_logits(values: &[f64], current: f64, grad: f64, params: &ChainParams, out: &mut [f64]) {
    let a = grad / (2.0 * params.tau);
    let b = 1.0 / (2.0 * params.alpha);
    for (o, &v) in out.iter_mut().zip(values) {
        let d = v - current;
        *o = a * d - b * d * d;
    }
}

/// Normalized log-probabilities in place; returns nothing, `out` holds
/// `log q_d(v | x)` afterwards.
#[inline]
pub(crate) fn coord_log_probs(values: &[f64], current: f64, grad: f64, params: &ChainParams, out: &mut [f64]) {
    coord_logits(values, current, grad, params, out);
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = out.iter().map(|&l| exp(l - max)).sum();
    let lz = max + ln(sum);
    for o in out.iter_mut() {
        *o -= lz;
    }
}

/// Per-coordinate logits of the discrete Langevin proposal; normalize with
/// [`crate::math::softmax_in_place`].
pub fn proposal_logits<M: EnergyModel + ?Sized>(
    model: &M,
    state: &StateVector,
    params: &ChainParams,
    coord: usize,
) -> Result<Vec<f64>> {
    let domain = model.domain();
    if coord >= domain.dim() {
        return Err(Error::invalid(alloc::format!(
            "coordinate {coord} out of range for dimension {}",
            domain.dim()
        )));
    }
    let cs = ChainState::new(model, state.clone())?;
    let values = domain.values();
    let mut out = vec![0.0; values.len()];
    coord_logits(&values, cs.point[coord], cs.gradient[coord], params, &mut out);
    Ok(out)
}

/// Reusable buffers for drawing proposals for one chain.
#[derive(Debug, Clone)]
pub(crate) struct Proposer {
    params: ChainParams,
    values: Vec<f64>,
    scratch: Vec<f64>,
}

impl Proposer {
    pub(crate) fn new<M: EnergyModel + ?Sized>(model: &M, params: ChainParams) -> Self {
        let values = model.domain().values();
        let scratch = vec![0.0; values.len()];
        Proposer {
            params,
            values,
            scratch,
        }
    }

    pub(crate) fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Draws every coordinate independently (one uniform per coordinate, in
    /// coordinate order) and returns the proposal with its forward and
    /// reverse log proposal probabilities.
    pub(crate) fn propose<M: EnergyModel + ?Sized, R: Rng + ?Sized>(
        &mut self,
        model: &M,
        cur: &ChainState,
        rng: &mut R,
    ) -> Result<(ChainState, f64, f64)> {
        let dim = cur.point.len();
        let mut idx = Vec::with_capacity(dim);
        let mut point = Vec::with_capacity(dim);
        let mut forward = 0.0;
        for d in 0..dim {
            coord_log_probs(&self.values, cur.point[d], cur.gradient[d], &self.params, &mut self.scratch);
            let k = inverse_cdf(&self.scratch, uniform(rng));
            forward += self.scratch[k];
            idx.push(k);
            point.push(self.values[k]);
        }
        let next = ChainState::from_parts(model, StateVector::new(idx), point)?;
        let reverse = self.log_q(&next, cur.state.indices());
        Ok((next, forward, reverse))
    }

    /// `log q(to | from)` for a target given by level indices.
    pub(crate) fn log_q(&mut self, from: &ChainState, to: &[usize]) -> f64 {
        let mut total = 0.0;
        for (d, &k) in to.iter().enumerate() {
            coord_log_probs(&self.values, from.point[d], from.gradient[d], &self.params, &mut self.scratch);
            total += self.scratch[k];
        }
        total
    }

    /// Per-coordinate log proposal probabilities from `from`, row-major
    /// `dim × levels`.
    pub(crate) fn coordinate_log_probs(&mut self, from: &ChainState) -> Vec<f64> {
        let levels = self.values.len();
        let mut out = vec![0.0; from.point.len() * levels];
        for (d, row) in out.chunks_exact_mut(levels).enumerate() {
            coord_log_probs(&self.values, from.point[d], from.gradient[d], &self.params, row);
        }
        out
    }
}

/// Draws a proposal from the discrete Langevin kernel without deciding
/// acceptance.
pub fn dls_step<M: EnergyModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    state: &StateVector,
    params: &ChainParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    let cur = ChainState::new(model, state.clone())?;
    let mut p = Proposer::new(model, *params);
    let (next, forward_logq, reverse_logq) = p.propose(model, &cur, rng)?;
    Ok(StepOutcome {
        state: next.state.clone(),
        proposal: next.state,
        forward_logq,
        reverse_logq,
        accepted: true,
    })
}

/// Log MH acceptance ratio for a chain targeting `π^{1/τ}`.
#[inline]
pub(crate) fn log_acceptance(delta_u: f64, tau: f64, forward_logq: f64, reverse_logq: f64) -> f64 {
    delta_u / tau + reverse_logq - forward_logq
}

/// Accepts with probability `min{1, exp(log_ratio)}`; always consumes one
/// uniform.
#[inline]
pub(crate) fn mh_decide<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    let u = uniform(rng);
    log_ratio >= 0.0 || u < exp(log_ratio)
}

/// Metropolis–Hastings decision for `outcome` drawn from `current`. With MH
/// disabled in `params` the proposal is always accepted and no randomness
/// is consumed.
pub fn mh_accept<M: EnergyModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    params: &ChainParams,
    outcome: &StepOutcome,
    current: &StateVector,
    rng: &mut R,
) -> Result<bool> {
    if !params.mh {
        return Ok(true);
    }
    let du = energy_value(model, &outcome.proposal)? - energy_value(model, current)?;
    Ok(mh_decide(
        log_acceptance(du, params.tau, outcome.forward_logq, outcome.reverse_logq),
        rng,
    ))
}

/// Closed-form flip probabilities for two-level domains: each coordinate
/// flips with `σ(g·Δ/(2τ) − Δ²/(2α))` where `Δ` is the flip displacement.
pub fn binary_flip_probs<M: EnergyModel + ?Sized>(
    model: &M,
    state: &StateVector,
    params: &ChainParams,
) -> Result<Vec<f64>> {
    let domain = model.domain();
    let spin = match domain.kind() {
        DomainKind::Binary01 => false,
        DomainKind::SpinPm1 => true,
        DomainKind::OrdinalGrid { .. } => {
            return Err(Error::WrongDomain("flip probabilities need a binary or spin domain"))
        }
    };
    let cs = ChainState::new(model, state.clone())?;
    Ok(cs
        .point
        .iter()
        .zip(&cs.gradient)
        .map(|(&x, &g)| {
            let delta = if spin { -2.0 * x } else { 1.0 - 2.0 * x };
            sigmoid(g * delta / (2.0 * params.tau) - delta * delta / (2.0 * params.alpha))
        })
        .collect())
}

/// Index of the first value whose cumulative probability exceeds `u`.
#[inline]
fn inverse_cdf(log_probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &lp) in log_probs.iter().enumerate() {
        let p = exp(lp);
        if p > 0.0 {
            last_positive = k;
        }
        acc += p;
        if u < acc {
            return k;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::energy::QuadraticEnergy;
    use crate::rng::aux_stream;

    fn flat(domain: DomainSpec) -> QuadraticEnergy {
        let n = domain.dim();
        QuadraticEnergy::new(domain, vec![0.0; n * n], vec![0.0; n], 1.0).unwrap()
    }

    fn softmax(mut l: Vec<f64>) -> Vec<f64> {
        crate::math::softmax_in_place(&mut l);
        l
    }

    #[test]
    fn ordinal_three_levels() {
        let m = flat(DomainSpec::grid(1, 3, -1.0, 1.0).unwrap());
        let p = ChainParams::new(2.0, 1.0, false).unwrap();
        let l = proposal_logits(&m, &StateVector::new(vec![1]), &p, 0).unwrap();
        assert_eq!(l, vec![-0.25, 0.0, -0.25]);
        let stay = softmax(l)[1];
        assert!((stay - 1.0 / (1.0 + 2.0 * (-0.25f64).exp())).abs() < 1e-15);
        assert!((stay - 0.3910).abs() < 1e-4);
    }

    #[test]
    fn binary_with_gradient() {
        // U = 2x on one binary coordinate
        let m = QuadraticEnergy::new(DomainSpec::binary(1).unwrap(), vec![0.0], vec![2.0], 1.0).unwrap();
        let p = ChainParams::new(1.0, 1.0, false).unwrap();
        let l = proposal_logits(&m, &StateVector::new(vec![0]), &p, 0).unwrap();
        assert_eq!(l[1], 0.5);
        assert!((softmax(l)[1] - 0.62246).abs() < 1e-5);
        let f = binary_flip_probs(&m, &StateVector::new(vec![0]), &p).unwrap();
        assert!((f[0] - sigmoid(0.5)).abs() < 1e-15);
    }

    #[test]
    fn spin_flip_distance_two() {
        let m = flat(DomainSpec::spin(1).unwrap());
        let p = ChainParams::new(2.0, 1.0, false).unwrap();
        let l = proposal_logits(&m, &StateVector::new(vec![0]), &p, 0).unwrap();
        assert_eq!(l[1], -1.0);
        assert!((softmax(l)[1] - 0.26894).abs() < 1e-5);
        let big = ChainParams::new(1e12, 1.0, false).unwrap();
        assert!((binary_flip_probs(&m, &StateVector::new(vec![0]), &big).unwrap()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ordinal_flip_probs_rejected() {
        let m = flat(DomainSpec::grid(2, 4, 0.0, 1.0).unwrap());
        let p = ChainParams::new(1.0, 1.0, false).unwrap();
        assert!(matches!(
            binary_flip_probs(&m, &StateVector::new(vec![0, 0]), &p),
            Err(Error::WrongDomain(_))
        ));
        assert!(proposal_logits(&m, &StateVector::new(vec![0, 0]), &p, 2).is_err());
    }

    #[test]
    fn tiny_step_stays_put() {
        let m = flat(DomainSpec::grid(3, 5, -2.0, 2.0).unwrap());
        let p = ChainParams::new(1e-9, 1.0, false).unwrap();
        let s = StateVector::new(vec![0, 2, 4]);
        let mut rng = aux_stream(11);
        for _ in 0..1000 {
            assert_eq!(dls_step(&m, &s, &p, &mut rng).unwrap().proposal, s);
        }
    }

    #[test]
    fn flip_frequency_matches_closed_form() {
        let m = flat(DomainSpec::binary(1).unwrap());
        let p = ChainParams::new(1.0, 1.0, false).unwrap();
        let s = StateVector::new(vec![0]);
        let mut rng = aux_stream(12);
        let n = 100_000;
        let flips = (0..n)
            .filter(|_| dls_step(&m, &s, &p, &mut rng).unwrap().proposal.indices()[0] == 1)
            .count();
        assert!((flips as f64 / n as f64 - 0.37754).abs() < 0.005);
    }

    #[test]
    fn step_is_deterministic_and_logq_consistent() {
        let m = QuadraticEnergy::new(DomainSpec::spin(2).unwrap(), vec![0.0, 1.0, 1.0, 0.0], vec![0.1, -0.3], 0.2).unwrap();
        let p = ChainParams::new(0.6, 1.3, true).unwrap();
        let s = StateVector::new(vec![1, 0]);
        let a = dls_step(&m, &s, &p, &mut aux_stream(13)).unwrap();
        let b = dls_step(&m, &s, &p, &mut aux_stream(13)).unwrap();
        assert_eq!(a, b);
        let fwd: f64 = (0..2)
            .map(|c| {
                let pr = softmax(proposal_logits(&m, &s, &p, c).unwrap());
                pr[a.proposal.indices()[c]].ln()
            })
            .sum();
        let rev: f64 = (0..2)
            .map(|c| {
                let pr = softmax(proposal_logits(&m, &a.proposal, &p, c).unwrap());
                pr[s.indices()[c]].ln()
            })
            .sum();
        assert!((a.forward_logq - fwd).abs() < 1e-12);
        assert!((a.reverse_logq - rev).abs() < 1e-12);
    }

    #[test]
    fn identity_proposal_always_accepted() {
        let m = QuadraticEnergy::new(DomainSpec::spin(2).unwrap(), vec![0.0, 1.0, 1.0, 0.0], vec![0.1, -0.3], 0.2).unwrap();
        let p = ChainParams::new(0.6, 1.0, true).unwrap();
        let s = StateVector::new(vec![1, 0]);
        let out = StepOutcome {
            state: s.clone(),
            proposal: s.clone(),
            forward_logq: -0.7,
            reverse_logq: -0.7,
            accepted: true,
        };
        let mut rng = aux_stream(14);
        assert!((0..1000).all(|_| mh_accept(&m, &p, &out, &s, &mut rng).unwrap()));
    }

    #[test]
    fn symmetric_proposal_acceptance_is_energy_ratio() {
        let du: f64 = -0.8;
        let lr = log_acceptance(du, 2.0, -1.1, -1.1);
        assert!((lr + 0.4).abs() < 1e-15);
        let mut rng = aux_stream(15);
        let n = 200_000;
        let acc = (0..n).filter(|_| mh_decide(lr, &mut rng)).count() as f64 / n as f64;
        assert!((acc - (-0.4f64).exp()).abs() < 0.004);
    }

    #[test]
    fn inverse_cdf_edges() {
        let lp = [0.25f64.ln(), 0.5f64.ln(), 0.25f64.ln()];
        assert_eq!(inverse_cdf(&lp, 0.0), 0);
        assert_eq!(inverse_cdf(&lp, 0.3), 1);
        assert_eq!(inverse_cdf(&lp, 0.999_999_999), 2);
        let lp = [0.0f64, f64::NEG_INFINITY];
        assert_eq!(inverse_cdf(&lp, 1.0 - 1e-17), 0);
    }

    #[test]
    fn non_finite_energy_is_reported() {
        let m = QuadraticEnergy::new(DomainSpec::binary(2).unwrap(), vec![0.0; 4], vec![f64::MAX, f64::MAX], 1.0).unwrap();
        let err = ChainState::new(&m, StateVector::new(vec![1, 1])).unwrap_err();
        assert!(matches!(err, Error::NonFinite { ref state, .. } if state == &vec![1, 1]));
    }
}
