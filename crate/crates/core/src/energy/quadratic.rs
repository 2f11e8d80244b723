use alloc::vec;
use alloc::vec::Vec;

use super::EnergyModel;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// `U(θ) = w·θᵀJθ + bᵀθ` with symmetric `J`.
///
/// With `J` a 0/1 adjacency matrix and a spin domain this is the Ising model.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticEnergy {
    domain: DomainSpec,
    coupling: Vec<f64>,
    bias: Vec<f64>,
    strength: f64,
}

impl QuadraticEnergy {
    /// `coupling` is row-major `dim × dim`.
    pub fn new(domain: DomainSpec, coupling: Vec<f64>, bias: Vec<f64>, strength: f64) -> Result<Self> {
        let d = domain.dim();
        if coupling.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: coupling.len(),
            });
        }
        if bias.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bias.len(),
            });
        }
        if !(strength > 0.0) || !strength.is_finite() {
            return Err(Error::invalid("connectivity strength must be positive"));
        }
        for i in 0..d {
            for j in 0..i {
                if coupling[i * d + j] != coupling[j * d + i] {
                    return Err(Error::invalid("coupling matrix must be symmetric"));
                }
            }
        }
        if coupling.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite coupling or bias"));
        }
        Ok(QuadraticEnergy {
            domain,
            coupling,
            bias,
            strength,
        })
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn coupling_at(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.domain.dim() + j]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// `dᵀJd` for a displacement `d`.
    pub fn coupling_form(&self, d: &[f64]) -> f64 {
        let n = self.domain.dim();
        let mut acc = 0.0;
        for i in 0..n {
            if d[i] == 0.0 {
                continue;
            }
            let row = &self.coupling[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(d).map(|(a, b)| a * b).sum();
            acc += d[i] * s;
        }
        acc
    }
}

impl EnergyModel for QuadraticEnergy {
    fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.bias.iter().zip(x).map(|(b, v)| b * v).sum();
        self.strength * self.coupling_form(x) + lin
    }

    fn gradient_at(&self, x: &[f64], out: &mut [f64]) {
        let n = self.domain.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.coupling[i * n..(i + 1) * n];
            let jx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            *o = 2.0 * self.strength * jx + self.bias[i];
        }
    }

    fn as_quadratic(&self) -> Option<&QuadraticEnergy> {
        Some(self)
    }
}

/// Nearest-neighbour Ising model on a `side × side` square lattice with
/// spins embedded as ±1. With `periodic` the lattice wraps into a torus;
/// coincident wrap-around edges (side 2) collapse into one.
pub fn make_ising_lattice(side: usize, strength: f64, bias: Vec<f64>, periodic: bool) -> Result<QuadraticEnergy> {
    if side < 2 {
        return Err(Error::invalid("lattice side must be at least 2"));
    }
    let d = side * side;
    if bias.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bias.len(),
        });
    }
    let mut coupling = vec![0.0; d * d];
    let mut link = |a: usize, b: usize| {
        if a != b {
            coupling[a * d + b] = 1.0;
            coupling[b * d + a] = 1.0;
        }
    };
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            if c + 1 < side {
                link(i, i + 1);
            } else if periodic {
                link(i, r * side);
            }
            if r + 1 < side {
                link(i, i + side);
            } else if periodic {
                link(i, c);
            }
        }
    }
    QuadraticEnergy::new(DomainSpec::spin(d)?, coupling, bias, strength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy_gradient, energy_value};

    fn two_spin() -> QuadraticEnergy {
        QuadraticEnergy::new(
            DomainSpec::spin(2).unwrap(),
            vec![0.0, 1.0, 1.0, 0.0],
            vec![0.0, 0.0],
            0.15,
        )
        .unwrap()
    }

    #[test]
    fn two_spin_value_and_gradient() {
        let m = two_spin();
        let s = vec![1, 1].into();
        assert!((energy_value(&m, &s).unwrap() - 0.3).abs() < 1e-15);
        let g = energy_gradient(&m, &s).unwrap();
        assert!((g[0] - 0.3).abs() < 1e-15 && (g[1] - 0.3).abs() < 1e-15);
    }

    fn row_sums(m: &QuadraticEnergy) -> Vec<f64> {
        let d = m.domain().dim();
        (0..d).map(|i| (0..d).map(|j| m.coupling_at(i, j)).sum()).collect()
    }

    #[test]
    fn lattice_edge_counts() {
        let open = make_ising_lattice(2, 1.0, vec![0.0; 4], false).unwrap();
        assert_eq!(open.coupling().iter().filter(|&&v| v != 0.0).count(), 8);
        let torus3 = make_ising_lattice(3, 1.0, vec![0.0; 9], true).unwrap();
        assert!(row_sums(&torus3).iter().all(|&s| s == 4.0));
        let torus2 = make_ising_lattice(2, 1.0, vec![0.0; 4], true).unwrap();
        assert!(row_sums(&torus2).iter().all(|&s| s == 2.0));
        assert!(make_ising_lattice(1, 1.0, vec![0.0], false).is_err());
    }

    #[test]
    fn rejects_asymmetric_coupling() {
        let r = QuadraticEnergy::new(DomainSpec::spin(2).unwrap(), vec![0.0, 1.0, 0.0, 0.0], vec![0.0; 2], 1.0);
        assert!(r.is_err());
    }
}
