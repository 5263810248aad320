//! Dense n-qubit states, gates and the scalar functionals computed on them.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index.

mod channel;
mod gate;
mod measures;
mod pauli;
mod state;

pub use channel::MixedUnitaryChannel;
pub use gate::{
    choi_state, named_gate, perturb_unitary, random_hermitian_unit_norm, random_unitary, NamedGate,
    UnitaryGate,
};
pub use measures::{
    eigen_stats, fidelity, linear_entropy, moment, partial_trace, purity, relative_entropy,
    trace_distance, von_neumann_entropy, EigenStats, EIGEN_THRESHOLD, LOG_CLAMP,
};
pub use pauli::{expectation, pauli_basis, pauli_strings, PauliBasis, PauliLetter, PauliString};
pub use state::{random_mixed_state, random_pure_state, random_pure_vector, DensityMatrix};

pub(crate) use measures::Spectrum;

use crate::error::{Error, Result};

/// Default cap on the number of qubits of any materialized state.
pub const DEFAULT_MAX_QUBITS: usize = 10;

/// Environment variable overriding [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "WDIST_MAX_QUBITS";

/// Tolerance for the Hermitian / trace / PSD / unitarity invariants.
pub const INVARIANT_TOL: f64 = 1e-10;

pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

pub(crate) fn check_qubits(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::dim("qubit count must be at least 1"));
    }
    let cap = max_qubits();
    if n > cap {
        return Err(Error::dim(format!(
            "{n} qubits exceeds the cap of {cap} (set {MAX_QUBITS_ENV} to raise it)"
        )));
    }
    Ok(1usize << n)
}

/// log2 of a power-of-two dimension.
pub(crate) fn qubits_for_dim(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::dim(format!(
            "dimension {d} is not a power of two >= 2"
        )));
    }
    Ok(d.trailing_zeros() as usize)
}
