use alloc::vec::Vec;

use log::warn;
use rand::Rng;

use super::proposal::{log_acceptance, mh_decide, ChainState, Proposer};
use super::swap::swap_prob_unchecked;
use super::{ChainParams, SamplerKind, SwapConfig, SwapVariant};
use crate::domain::{DomainSpec, StateVector};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::rng::{uniform, RunStreams};

/// One chain with its cached position and proposal buffers.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub(crate) current: ChainState,
    proposer: Proposer,
}

impl Chain {
    pub(crate) fn new<M: EnergyModel + ?Sized>(model: &M, params: ChainParams, state: StateVector) -> Result<Self> {
        Ok(Chain {
            current: ChainState::new(model, state)?,
            proposer: Proposer::new(model, params),
        })
    }

    pub(crate) fn params(&self) -> &ChainParams {
        self.proposer.params()
    }

    /// Proposal followed by the MH decision when enabled. Returns whether the
    /// proposal was kept.
    pub(crate) fn step<M: EnergyModel + ?Sized, R: Rng + ?Sized>(&mut self, model: &M, rng: &mut R) -> Result<bool> {
        let (next, fwd, rev) = self.proposer.propose(model, &self.current, rng)?;
        let params = *self.proposer.params();
        let accept = !params.mh
            || mh_decide(
                log_acceptance(next.energy - self.current.energy, params.tau, fwd, rev),
                rng,
            );
        if accept {
            self.current = next;
        }
        Ok(accept)
    }
}

/// How initial states are drawn. Each chain draws its own initial state
/// from its own stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Every coordinate uniform over its levels.
    Uniform,
    /// Two-level domains only: the upper level with probability `p_one`.
    Bernoulli { p_one: f64 },
    /// The same fixed state for both chains.
    Given(StateVector),
}

impl Init {
    pub(crate) fn draw<R: Rng + ?Sized>(&self, domain: &DomainSpec, rng: &mut R) -> Result<StateVector> {
        match self {
            Init::Uniform => {
                let n = domain.levels();
                Ok(StateVector::new((0..domain.dim()).map(|_| rng.random_range(0..n)).collect()))
            }
            Init::Bernoulli { p_one } => {
                if !domain.is_two_level() {
                    return Err(Error::WrongDomain("Bernoulli initialization needs a two-level domain"));
                }
                if !(0.0..=1.0).contains(p_one) {
                    return Err(Error::invalid("p_one must lie in [0, 1]"));
                }
                Ok(StateVector::new(
                    (0..domain.dim()).map(|_| usize::from(uniform(rng) < *p_one)).collect(),
                ))
            }
            Init::Given(s) => {
                domain.validate(s)?;
                Ok(s.clone())
            }
        }
    }
}

/// Per-iteration record of a replica step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub accepted_low: bool,
    pub accepted_high: bool,
    pub swapped: bool,
    pub swap_prob: f64,
    pub energy_low: f64,
    pub energy_high: f64,
}

/// Low- and high-temperature chains with their swap rule.
#[derive(Debug, Clone)]
pub struct ReplicaPair {
    low: Chain,
    high: Chain,
    prev_energy_low: f64,
    prev_energy_high: f64,
    swap: SwapConfig,
}

impl ReplicaPair {
    pub fn new<M: EnergyModel + ?Sized>(
        model: &M,
        low: StateVector,
        high: StateVector,
        params_low: ChainParams,
        params_high: ChainParams,
        swap: SwapConfig,
    ) -> Result<Self> {
        if params_low.tau >= params_high.tau || params_low.alpha >= params_high.alpha {
            warn!(
                "replica pair expects tau_low < tau_high and alpha_low < alpha_high, got tau ({}, {}) alpha ({}, {})",
                params_low.tau, params_high.tau, params_low.alpha, params_high.alpha
            );
        }
        let low = Chain::new(model, params_low, low)?;
        let high = Chain::new(model, params_high, high)?;
        Ok(ReplicaPair {
            prev_energy_low: low.current.energy,
            prev_energy_high: high.current.energy,
            low,
            high,
            swap,
        })
    }

    pub fn low(&self) -> &ChainState {
        &self.low.current
    }

    pub fn high(&self) -> &ChainState {
        &self.high.current
    }

    pub fn params_low(&self) -> &ChainParams {
        self.low.params()
    }

    pub fn params_high(&self) -> &ChainParams {
        self.high.params()
    }

    pub fn swap_config(&self) -> &SwapConfig {
        &self.swap
    }

    /// Energies of the states held at the start of the next step.
    pub fn prev_energies(&self) -> (f64, f64) {
        (self.prev_energy_low, self.prev_energy_high)
    }

    /// Sampling, MH (when enabled per chain) and swapping, in that order.
    /// The low chain draws from `streams.low`, the high chain from
    /// `streams.high`, and the swap decision from `streams.swap`.
    pub fn replica_step<M: EnergyModel + ?Sized>(&mut self, model: &M, streams: &mut RunStreams) -> Result<IterationStats> {
        let accepted_low = self.low.step(model, &mut streams.low)?;
        let accepted_high = self.high.step(model, &mut streams.high)?;
        let p = swap_prob_unchecked(
            &self.swap,
            self.low.params().tau,
            self.high.params().tau,
            self.low.current.energy,
            self.high.current.energy,
            self.prev_energy_low,
            self.prev_energy_high,
        );
        let swapped = uniform(&mut streams.swap) < p;
        if swapped {
            core::mem::swap(&mut self.low.current, &mut self.high.current);
        }
        self.prev_energy_low = self.low.current.energy;
        self.prev_energy_high = self.high.current.energy;
        Ok(IterationStats {
            accepted_low,
            accepted_high,
            swapped,
            swap_prob: p,
            energy_low: self.prev_energy_low,
            energy_high: self.prev_energy_high,
        })
    }
}

/// Everything needed to run one sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: SamplerKind,
    pub low: ChainParams,
    /// Required exactly when `kind` is a replica sampler.
    pub high: Option<ChainParams>,
    pub swap: SwapConfig,
    pub iterations: usize,
    /// Keep every `thin`-th low-chain state.
    pub thin: usize,
    pub init: Init,
}

impl RunConfig {
    /// Builds a configuration with MH and the swap variant implied by
    /// `kind`. `high` is ignored for single-chain samplers.
    pub fn for_kind(
        kind: SamplerKind,
        low: (f64, f64),
        high: Option<(f64, f64)>,
        rho: f64,
        sigma2: f64,
        iterations: usize,
    ) -> Result<Self> {
        let mh = kind.uses_mh();
        let low = ChainParams::new(low.0, low.1, mh)?;
        let (high, swap) = if kind.is_replica() {
            let (a, t) = high.ok_or_else(|| Error::invalid(alloc::format!("{kind} needs high-chain parameters")))?;
            (
                Some(ChainParams::new(a, t, mh)?),
                SwapConfig::new(kind.swap_variant(sigma2), rho)?,
            )
        } else {
            (None, SwapConfig::disabled())
        };
        Ok(RunConfig {
            kind,
            low,
            high,
            swap,
            iterations,
            thin: 1,
            init: Init::Uniform,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thinning stride must be at least 1"));
        }
        if self.kind.is_replica() != self.high.is_some() {
            return Err(Error::invalid(alloc::format!(
                "{} {} high-chain parameters",
                self.kind,
                if self.kind.is_replica() { "requires" } else { "does not take" }
            )));
        }
        let mh = self.kind.uses_mh();
        if self.low.mh != mh || self.high.is_some_and(|h| h.mh != mh) {
            return Err(Error::invalid(alloc::format!("MH flag does not match sampler {}", self.kind)));
        }
        if self.kind.is_replica() {
            let biased = matches!(self.swap.variant, SwapVariant::BiasCorrected { .. });
            if biased != self.kind.is_bias_corrected() {
                return Err(Error::invalid(alloc::format!("swap variant does not match sampler {}", self.kind)));
            }
        }
        Ok(())
    }
}

/// Output of [`run_sampler`]. Samples are the low chain's states after each
/// iteration (thinned), stored flat with stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub dim: usize,
    pub thin: usize,
    pub replica: bool,
    pub samples: Vec<usize>,
    pub energy_low: Vec<f64>,
    /// Empty for single-chain runs.
    pub energy_high: Vec<f64>,
    pub accepted_low: Vec<bool>,
    pub accepted_high: Vec<bool>,
    pub swapped: Vec<bool>,
    pub swap_attempts: usize,
    pub swap_successes: usize,
}

impl RunTrace {
    fn with_capacity(dim: usize, thin: usize, iterations: usize, replica: bool) -> Self {
        let pair = if replica { iterations } else { 0 };
        RunTrace {
            dim,
            thin,
            replica,
            samples: Vec::with_capacity(dim * iterations.div_ceil(thin)),
            energy_low: Vec::with_capacity(iterations),
            energy_high: Vec::with_capacity(pair),
            accepted_low: Vec::with_capacity(iterations),
            accepted_high: Vec::with_capacity(pair),
            swapped: Vec::with_capacity(pair),
            swap_attempts: 0,
            swap_successes: 0,
        }
    }

    /// Iterations recorded.
    pub fn iterations(&self) -> usize {
        self.energy_low.len()
    }

    /// Number of emitted samples.
    pub fn len(&self) -> usize {
        self.samples.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[usize] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_samples(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.samples.chunks_exact(self.dim.max(1))
    }

    pub fn accept_count_low(&self) -> usize {
        self.accepted_low.iter().filter(|&&a| a).count()
    }

    pub fn accept_count_high(&self) -> usize {
        self.accepted_high.iter().filter(|&&a| a).count()
    }

    fn emit(&mut self, i: usize, state: &StateVector) {
        if i.is_multiple_of(self.thin) {
            self.samples.extend_from_slice(state.indices());
        }
    }
}

/// Runs a sampler for `config.iterations` steps. Single-chain samplers use
/// only `streams.low`, so a replica run with `ρ = 0` reproduces them
/// exactly on its low chain.
pub fn run_sampler<M: EnergyModel + ?Sized>(model: &M, config: &RunConfig, streams: &mut RunStreams) -> Result<RunTrace> {
    config.validate()?;
    let domain = model.domain();
    let replica = config.kind.is_replica();
    let mut trace = RunTrace::with_capacity(domain.dim(), config.thin, config.iterations, replica);
    let init_low = config.init.draw(domain, &mut streams.low)?;
    match config.high {
        None => {
            let mut chain = Chain::new(model, config.low, init_low)?;
            for i in 0..config.iterations {
                let acc = chain.step(model, &mut streams.low)?;
                trace.accepted_low.push(acc);
                trace.energy_low.push(chain.current.energy);
                trace.emit(i, &chain.current.state);
            }
        }
        Some(high) => {
            let init_high = config.init.draw(domain, &mut streams.high)?;
            let mut pair = ReplicaPair::new(model, init_low, init_high, config.low, high, config.swap)?;
            for i in 0..config.iterations {
                let st = pair.replica_step(model, streams)?;
                trace.accepted_low.push(st.accepted_low);
                trace.accepted_high.push(st.accepted_high);
                trace.swapped.push(st.swapped);
                trace.energy_low.push(st.energy_low);
                trace.energy_high.push(st.energy_high);
                trace.swap_attempts += 1;
                trace.swap_successes += usize::from(st.swapped);
                trace.emit(i, &pair.low.current.state);
            }
        }
    }
    Ok(trace)
}
