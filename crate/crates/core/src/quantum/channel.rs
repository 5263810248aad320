use super::{DensityMatrix, UnitaryGate};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// E(ρ) = Σ_k p_k V_k ρ V_k†
#[derive(Debug, Clone)]
pub struct MixedUnitaryChannel {
    components: Vec<(f64, UnitaryGate)>,
}

impl MixedUnitaryChannel {
    pub fn new(components: Vec<(f64, UnitaryGate)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::param("channel has no components"))?;
        let n = first.1.n_qubits();
        if components.iter().any(|(_, g)| g.n_qubits() != n) {
            return Err(Error::param(
                "channel components act on different qubit counts",
            ));
        }
        if components.iter().any(|(p, _)| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("channel probabilities must lie in [0, 1]"));
        }
        let total: f64 = components.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::param(format!(
                "channel probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(vec![(1.0, UnitaryGate::identity(n_qubits)?)])
    }

    pub fn n_qubits(&self) -> usize {
        self.components[0].1.n_qubits()
    }

    pub fn components(&self) -> &[(f64, UnitaryGate)] {
        &self.components
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n_qubits() {
            return Err(Error::param(format!(
                "channel acts on {} qubits, state has {}",
                self.n_qubits(),
                rho.n_qubits()
            )));
        }
        let d = rho.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (p, v) in &self.components {
            acc += (v.matrix() * rho.matrix() * v.matrix().adjoint()).scale(*p);
        }
        Ok(DensityMatrix::from_raw(
            rho.n_qubits(),
            linalg::hermitize(&acc),
        ))
    }
}
