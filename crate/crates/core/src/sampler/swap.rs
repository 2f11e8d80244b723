use super::{SwapConfig, SwapVariant};
use crate::error::{Error, Result};
use crate::math::exp;

/// Exponent of the swap function for the chosen variant.
#[inline]
pub(crate) fn swap_exponent(
    variant: SwapVariant,
    tau1: f64,
    tau2: f64,
    u_next1: f64,
    u_next2: f64,
    u_prev1: f64,
    u_prev2: f64,
) -> f64 {
    let c = 1.0 / tau2 - 1.0 / tau1;
    match variant {
        SwapVariant::Naive => c * (u_next1 - u_next2),
        SwapVariant::BiasCorrected { sigma2 } => c * (u_next1 - u_next2 + (1.0 / tau1 - 1.0 / tau2) * sigma2),
        SwapVariant::History => c * ((u_next1 + u_prev1) - (u_next2 + u_prev2)),
    }
}

/// Probability `ρ·min{1, S̃}` of exchanging the two chain states.
///
/// `u_next*` are energies of the states just produced by each chain and
/// `u_prev*` those of the states they started from (only the history
/// variant reads them).
pub fn swap_probability(
    config: &SwapConfig,
    tau1: f64,
    tau2: f64,
    u_next1: f64,
    u_next2: f64,
    u_prev1: f64,
    u_prev2: f64,
) -> Result<f64> {
    if !(tau1 > 0.0 && tau2 > 0.0) {
        return Err(Error::invalid("temperatures must be positive"));
    }
    if [u_next1, u_next2, u_prev1, u_prev2].iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite {
            what: "swap energy",
            state: alloc::vec::Vec::new(),
        });
    }
    Ok(swap_prob_unchecked(config, tau1, tau2, u_next1, u_next2, u_prev1, u_prev2))
}

#[inline]
pub(crate) fn swap_prob_unchecked(
    config: &SwapConfig,
    tau1: f64,
    tau2: f64,
    u_next1: f64,
    u_next2: f64,
    u_prev1: f64,
    u_prev2: f64,
) -> f64 {
    let e = swap_exponent(config.variant, tau1, tau2, u_next1, u_next2, u_prev1, u_prev2);
    config.rho * if e >= 0.0 { 1.0 } else { exp(e) }
}
