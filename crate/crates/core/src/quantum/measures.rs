//! Scalar functionals of states. All spectral quantities come from one
//! Hermitian eigendecomposition of the (hermitized) input.

use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianEigen};

/// Eigenvalues at or below this count as zero for entropy and effective rank.
pub const EIGEN_THRESHOLD: f64 = 1e-12;

/// Eigenvalues are clamped to at least this before any logarithm of a matrix.
pub const LOG_CLAMP: f64 = 1e-12;

/// ½ Σ|λ_i(ρ − σ)|. Used as the W1 ground truth throughout the crate.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.same_shape(sigma)?;
    // A fixed operand order makes the result bitwise symmetric.
    let (a, b) = if entry_order(rho.matrix(), sigma.matrix()).is_gt() {
        (sigma, rho)
    } else {
        (rho, sigma)
    };
    let diff = a.matrix() - b.matrix();
    let t = 0.5
        * linalg::eigenvalues_hermitian(&diff)
            .iter()
            .map(|l| l.abs())
            .sum::<f64>();
    Ok(t.clamp(0.0, 1.0))
}

fn entry_order(a: &CMatrix, b: &CMatrix) -> std::cmp::Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Uhlmann fidelity Tr √(√ρ σ √ρ), clipped to [0, 1]. Eigenvalues of the inner
/// product at or below [`EIGEN_THRESHOLD`] are dropped.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.same_shape(sigma)?;
    Ok(Spectrum::of(rho).fidelity_with(sigma))
}

/// −Σ λ log₂ λ over eigenvalues above [`EIGEN_THRESHOLD`], in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    Spectrum::of(rho).entropy()
}

/// Tr(ρ²)
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// 1 − Tr(ρ²)
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - purity(rho)
}

/// Re Tr(ρ^k) for k ≥ 1.
pub fn moment(rho: &DensityMatrix, k: u32) -> f64 {
    match k {
        0 => rho.dim() as f64,
        1 => rho.trace(),
        2 => purity(rho),
        _ => {
            let mut p = rho.matrix().clone();
            for _ in 2..k {
                p = &p * rho.matrix();
            }
            linalg::trace_product(&p, rho.matrix()).re
        }
    }
}

/// Tr[ρ(log₂ρ − log₂σ)] with eigenvalues clamped at [`LOG_CLAMP`] inside the
/// logarithms; never negative.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.same_shape(sigma)?;
    Ok(Spectrum::of(rho).relative_entropy_to(&Spectrum::of(sigma)))
}

/// Population statistics of the eigenvalue spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
    /// Fraction of eigenvalues above [`EIGEN_THRESHOLD`].
    pub effective_rank: f64,
}

pub fn eigen_stats(rho: &DensityMatrix) -> EigenStats {
    Spectrum::of(rho).stats()
}

/// Reduced state on the qubits in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::param("duplicate qubit index in partial trace"));
    }
    if kept.is_empty() || kept.len() >= n {
        return Err(Error::param(format!(
            "kept qubits must be a nonempty strict subset of 0..{n}, got {keep:?}"
        )));
    }
    if let Some(&q) = kept.iter().find(|&&q| q >= n) {
        return Err(Error::param(format!(
            "qubit {q} out of range for {n} qubits"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let place = |qubits: &[usize], value: usize| -> usize {
        let m = qubits.len();
        qubits.iter().enumerate().fold(0, |acc, (i, &q)| {
            let bit = (value >> (m - 1 - i)) & 1;
            acc | (bit << (n - 1 - q))
        })
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let kept_idx: Vec<usize> = (0..dk).map(|a| place(&kept, a)).collect();
    let traced_idx: Vec<usize> = (0..dt).map(|t| place(&traced, t)).collect();
    let m = rho.matrix();
    let out = CMatrix::from_fn(dk, dk, |a, b| {
        traced_idx
            .iter()
            .map(|&t| m[(kept_idx[a] | t, kept_idx[b] | t)])
            .sum()
    });
    Ok(DensityMatrix::from_raw(kept.len(), out))
}

/// Cached eigendecomposition of one state.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    eig: HermitianEigen,
}

impl Spectrum {
    pub fn of(rho: &DensityMatrix) -> Self {
        Self {
            eig: HermitianEigen::new(rho.matrix()),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn entropy(&self) -> f64 {
        let s: f64 = self
            .values()
            .iter()
            .filter(|&&l| l > EIGEN_THRESHOLD)
            .map(|&l| -l * l.log2())
            .sum();
        s.max(0.0)
    }

    pub fn stats(&self) -> EigenStats {
        let v = self.values();
        let d = v.len() as f64;
        let mean = v.iter().sum::<f64>() / d;
        let var = v.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / d;
        EigenStats {
            mean,
            std: var.sqrt(),
            max: v[v.len() - 1],
            min: v[0],
            effective_rank: v.iter().filter(|&&l| l > EIGEN_THRESHOLD).count() as f64 / d,
        }
    }

    pub fn fidelity_with(&self, sigma: &DensityMatrix) -> f64 {
        let sqrt_rho = self.eig.map(|l| l.max(0.0).sqrt());
        let inner = &sqrt_rho * sigma.matrix() * &sqrt_rho;
        // Round-off eigenvalues of order 1e-16 would contribute 1e-8 after the root.
        let f: f64 = linalg::eigenvalues_hermitian(&inner)
            .iter()
            .filter(|&&l| l > EIGEN_THRESHOLD)
            .map(|l| l.sqrt())
            .sum();
        f.clamp(0.0, 1.0)
    }

    /// D(self ‖ other) with clamped logarithms.
    pub fn relative_entropy_to(&self, other: &Spectrum) -> f64 {
        let self_term: f64 = self
            .values()
            .iter()
            .map(|&l| l * l.max(LOG_CLAMP).log2())
            .sum();
        // Tr(ρ log σ) = Σ_j log₂ μ_j ⟨w_j|ρ|w_j⟩ with ρ rebuilt from its own spectrum.
        let w = &other.eig.vectors;
        let rho = self.eig.map(|l| l);
        let rotated = w.adjoint() * rho * w;
        let cross: f64 = other
            .values()
            .iter()
            .enumerate()
            .map(|(j, &mu)| mu.max(LOG_CLAMP).log2() * rotated[(j, j)].re)
            .sum();
        (self_term - cross).max(0.0)
    }
}
