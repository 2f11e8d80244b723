//! Energy models. The target is `pi(theta) ∝ exp(U(theta) / tau)`, so modes
//! sit at maxima of `U`.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{DomainSpec, StateVector};
use crate::error::{Error, Result};

mod quadratic;
mod rbm;
mod synthetic;

pub use quadratic::{make_ising_lattice, QuadraticEnergy};
pub use rbm::RbmFreeEnergy;
pub use synthetic::{Landscape, Synthetic2D};

/// Energy `U` and gradient `∇U` on the real embedding of a discrete domain.
pub trait EnergyModel: Send + Sync {
    fn domain(&self) -> &DomainSpec;

    /// `U` at an embedded point.
    fn value_at(&self, x: &[f64]) -> f64;

    /// `∇U` at an embedded point, written to `out`.
    fn gradient_at(&self, x: &[f64], out: &mut [f64]);

    /// Present only for log-quadratic models.
    fn as_quadratic(&self) -> Option<&QuadraticEnergy> {
        None
    }
}

/// `U` at a validated state; non-finite energies are errors.
pub fn energy_value<M: EnergyModel + ?Sized>(model: &M, state: &StateVector) -> Result<f64> {
    let x = model.domain().embed(state)?;
    let u = model.value_at(&x);
    if !u.is_finite() {
        return Err(Error::NonFinite {
            what: "energy",
            state: state.indices().to_vec(),
        });
    }
    Ok(u)
}

pub fn energy_gradient<M: EnergyModel + ?Sized>(
    model: &M,
    state: &StateVector,
) -> Result<Vec<f64>> {
    let x = model.domain().embed(state)?;
    let mut g = vec![0.0; x.len()];
    model.gradient_at(&x, &mut g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            state: state.indices().to_vec(),
        });
    }
    Ok(g)
}

impl<M: EnergyModel + ?Sized> EnergyModel for &M {
    fn domain(&self) -> &DomainSpec {
        (**self).domain()
    }
    fn value_at(&self, x: &[f64]) -> f64 {
        (**self).value_at(x)
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient_at(x, out)
    }
    fn as_quadratic(&self) -> Option<&QuadraticEnergy> {
        (**self).as_quadratic()
    }
}

impl<M: EnergyModel + ?Sized> EnergyModel for alloc::boxed::Box<M> {
    fn domain(&self) -> &DomainSpec {
        (**self).domain()
    }
    fn value_at(&self, x: &[f64]) -> f64 {
        (**self).value_at(x)
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient_at(x, out)
    }
    fn as_quadratic(&self) -> Option<&QuadraticEnergy> {
        (**self).as_quadratic()
    }
}
