//! Gradient-based discrete samplers with replica exchange.
//!
//! The crate provides the discrete Langevin proposal (DULA / DMALA), its
//! two-temperature replica-exchange extensions (DREXEL / DREAM and the
//! bias-corrected bDREXEL / bDREAM), a set of energy models with closed-form
//! gradients, exact enumeration oracles for small state spaces, RBM training
//! with contrastive divergence, and the sample-quality metrics used to compare
//! samplers.
//!
//! Everything here is pure computation over `alloc`; file formats, the
//! experiment harness and the command line live in the `drexel` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod domain;
pub mod energy;
pub mod error;
pub mod math;
pub mod metrics;
pub mod oracle;
pub mod rbm;
pub mod rng;
pub mod sampler;

pub use domain::{DomainKind, DomainSpec, StateVector};
pub use energy::{EnergyModel, Landscape, QuadraticEnergy, RbmFreeEnergy, Synthetic2D};
pub use error::{Error, Result};
pub use sampler::{ChainParams, SamplerKind, SwapConfig, SwapVariant};
