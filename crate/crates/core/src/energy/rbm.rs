use alloc::vec;
use alloc::vec::Vec;

use super::EnergyModel;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::math::{sigmoid, softplus};

/// RBM visible free energy `U(v) = Σ_j softplus((Wv + c)_j) + bᵀv`, so that
/// `exp(U)` is the RBM marginal over visible units.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmFreeEnergy {
    domain: DomainSpec,
    hidden: usize,
    weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    visible_bias: Vec<f64>,
}

impl RbmFreeEnergy {
    /// `weights` is row-major `hidden × visible`.
    pub fn new(weights: Vec<f64>, hidden_bias: Vec<f64>, visible_bias: Vec<f64>) -> Result<Self> {
        let m = hidden_bias.len();
        let d = visible_bias.len();
        if m == 0 {
            return Err(Error::invalid("RBM needs at least one hidden unit"));
        }
        if weights.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: weights.len(),
            });
        }
        Ok(RbmFreeEnergy {
            domain: DomainSpec::binary(d)?,
            hidden: m,
            weights,
            hidden_bias,
            visible_bias,
        })
    }

    pub fn zeros(hidden: usize, visible: usize) -> Result<Self> {
        Self::new(vec![0.0; hidden * visible], vec![0.0; hidden], vec![0.0; visible])
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.hidden_bias, &mut self.visible_bias)
    }

    /// Hidden pre-activations `Wv + c`.
    pub fn hidden_input(&self, v: &[f64], out: &mut [f64]) {
        let d = self.visible();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * d..(j + 1) * d];
            *o = self.hidden_bias[j] + row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    /// Visible pre-activations `Wᵀh + b`.
    pub fn visible_input(&self, h: &[f64], out: &mut [f64]) {
        let d = self.visible();
        out.copy_from_slice(&self.visible_bias);
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &self.weights[j * d..(j + 1) * d];
            for (o, w) in out.iter_mut().zip(row) {
                *o += hj * w;
            }
        }
    }
}

impl EnergyModel for RbmFreeEnergy {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        self.hidden_input(x, &mut pre);
        let hidden: f64 = pre.iter().map(|&z| softplus(z)).sum();
        hidden + self.visible_bias.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn gradient_at(&self, x: &[f64], out: &mut [f64]) {
        let mut pre = vec![0.0; self.hidden];
        self.hidden_input(x, &mut pre);
        for p in pre.iter_mut() {
            *p = sigmoid(*p);
        }
        self.visible_input(&pre, out);
    }
}
