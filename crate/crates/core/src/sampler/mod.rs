//! Discrete Langevin proposals, Metropolis–Hastings correction, swap
//! functions and the two-replica exchange loop.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

mod proposal;
mod replica;
mod swap;

pub use proposal::{binary_flip_probs, dls_step, mh_accept, proposal_logits, ChainState, StepOutcome};
pub use replica::{run_sampler, Init, IterationStats, ReplicaPair, RunConfig, RunTrace};
pub use swap::swap_probability;
pub(crate) use proposal::Proposer;
pub(crate) use swap::swap_prob_unchecked;

/// Step size and temperature of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub alpha: f64,
    pub tau: f64,
    pub mh: bool,
}

impl ChainParams {
    pub fn new(alpha: f64, tau: f64, mh: bool) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid("step size alpha must be positive"));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("temperature tau must be positive"));
        }
        Ok(ChainParams { alpha, tau, mh })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapVariant {
    /// Energies of the freshly sampled states only.
    Naive,
    /// Naive exponent shifted by `(1/τ₁ − 1/τ₂)σ²` to debias noisy energies.
    BiasCorrected { sigma2: f64 },
    /// Adds the energies of the previous states.
    History,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapConfig {
    pub variant: SwapVariant,
    pub rho: f64,
}

impl SwapConfig {
    pub fn new(variant: SwapVariant, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid("swap intensity rho must lie in [0, 1]"));
        }
        if let SwapVariant::BiasCorrected { sigma2 } = variant {
            if !(sigma2 >= 0.0) || !sigma2.is_finite() {
                return Err(Error::invalid("sigma2 must be a finite non-negative number"));
            }
        }
        Ok(SwapConfig { variant, rho })
    }

    pub fn history() -> Self {
        SwapConfig {
            variant: SwapVariant::History,
            rho: 1.0,
        }
    }

    pub fn disabled() -> Self {
        SwapConfig {
            variant: SwapVariant::History,
            rho: 0.0,
        }
    }
}

/// The six named samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Dula,
    Dmala,
    Drexel,
    Dream,
    BDrexel,
    BDream,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 6] = [
        SamplerKind::Dula,
        SamplerKind::Dmala,
        SamplerKind::Drexel,
        SamplerKind::Dream,
        SamplerKind::BDrexel,
        SamplerKind::BDream,
    ];

    pub fn uses_mh(self) -> bool {
        matches!(self, SamplerKind::Dmala | SamplerKind::Dream | SamplerKind::BDream)
    }

    pub fn is_replica(self) -> bool {
        !matches!(self, SamplerKind::Dula | SamplerKind::Dmala)
    }

    pub fn is_bias_corrected(self) -> bool {
        matches!(self, SamplerKind::BDrexel | SamplerKind::BDream)
    }

    /// Swap variant for replica samplers; `sigma2` is only used by the
    /// bias-corrected ones.
    pub fn swap_variant(self, sigma2: f64) -> SwapVariant {
        if self.is_bias_corrected() {
            SwapVariant::BiasCorrected { sigma2 }
        } else {
            SwapVariant::History
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Dula => "dula",
            SamplerKind::Dmala => "dmala",
            SamplerKind::Drexel => "drexel",
            SamplerKind::Dream => "dream",
            SamplerKind::BDrexel => "bdrexel",
            SamplerKind::BDream => "bdream",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown sampler `{s}`")))
    }
}
