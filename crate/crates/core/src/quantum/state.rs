use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_qubits, qubits_for_dim, UnitaryGate, INVARIANT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::SeededRandomSource;
use crate::Complex64;

/// A d×d Hermitian, positive semidefinite, unit-trace matrix on n qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates every invariant to [`INVARIANT_TOL`].
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::dim(format!(
                "matrix is {}x{}, not square",
                data.nrows(),
                data.ncols()
            )));
        }
        let n_qubits = qubits_for_dim(data.nrows())?;
        check_qubits(n_qubits)?;
        let rho = Self { n_qubits, data };
        rho.validate()?;
        Ok(rho)
    }

    /// Caller guarantees the invariants (up to rounding).
    pub(crate) fn from_raw(n_qubits: usize, data: CMatrix) -> Self {
        debug_assert_eq!(data.nrows(), 1 << n_qubits);
        Self { n_qubits, data }
    }

    /// |ψ⟩⟨ψ| for the normalized amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        check_qubits(n_qubits)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::param("state vector has zero or non-finite norm"));
        }
        Ok(Self::from_raw(n_qubits, outer(amplitudes, 1.0 / norm)))
    }

    /// Computational basis projector |index⟩⟨index|.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = check_qubits(n_qubits)?;
        if index >= d {
            return Err(Error::param(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut data = CMatrix::zeros(d, d);
        data[(index, index)] = linalg::ONE;
        Ok(Self::from_raw(n_qubits, data))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let d = check_qubits(n_qubits)?;
        Ok(Self::from_raw(
            n_qubits,
            CMatrix::identity(d, d).unscale(d as f64),
        ))
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let data = CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                Complex64::new(probs[r], 0.0)
            } else {
                linalg::ZERO
            }
        });
        Self::new(data)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::max_abs(&(&self.data - self.data.adjoint()));
        if herm > INVARIANT_TOL {
            return Err(Error::param(format!(
                "matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.data.trace();
        if (tr.re - 1.0).abs() > INVARIANT_TOL || tr.im.abs() > INVARIANT_TOL {
            return Err(Error::param(format!("trace is {tr}, expected 1")));
        }
        let min = linalg::eigenvalues_hermitian(&self.data)[0];
        if min < -INVARIANT_TOL {
            return Err(Error::param(format!(
                "matrix is not PSD (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.n_qubits + other.n_qubits;
        check_qubits(n)?;
        Ok(Self::from_raw(n, linalg::kron(&self.data, &other.data)))
    }

    /// U ρ U†
    pub fn conjugate_by(&self, u: &UnitaryGate) -> Result<DensityMatrix> {
        if u.n_qubits() != self.n_qubits {
            return Err(Error::param(format!(
                "gate acts on {} qubits, state has {}",
                u.n_qubits(),
                self.n_qubits
            )));
        }
        let m = u.matrix() * &self.data * u.matrix().adjoint();
        Ok(Self::from_raw(self.n_qubits, linalg::hermitize(&m)))
    }

    /// (1 - α) self + α other
    pub fn mix(&self, other: &DensityMatrix, alpha: f64) -> Result<DensityMatrix> {
        self.same_shape(other)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param(format!(
                "mixing weight {alpha} outside [0, 1]"
            )));
        }
        Ok(Self::from_raw(
            self.n_qubits,
            self.data.scale(1.0 - alpha) + other.data.scale(alpha),
        ))
    }

    pub(crate) fn same_shape(&self, other: &DensityMatrix) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::param(format!(
                "dimension mismatch: {} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }
}

pub(crate) fn outer(v: &[Complex64], scale: f64) -> CMatrix {
    let d = v.len();
    let s2 = scale * scale;
    CMatrix::from_fn(d, d, |r, c| v[r] * v[c].conj() * s2)
}

/// Unit vector with i.i.d. complex-Gaussian components (Haar on the sphere).
pub fn random_pure_vector(n_qubits: usize, rng: &mut SeededRandomSource) -> Result<Vec<Complex64>> {
    let d = check_qubits(n_qubits)?;
    let mut v: Vec<Complex64> = (0..d).map(|_| rng.complex_gaussian()).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    Ok(v)
}

pub fn random_pure_state(n_qubits: usize, rng: &mut SeededRandomSource) -> Result<DensityMatrix> {
    let v = random_pure_vector(n_qubits, rng)?;
    Ok(DensityMatrix::from_raw(n_qubits, outer(&v, 1.0)))
}

/// Mixture of `rank` random pure states with flat-Dirichlet weights.
///
/// Draw order: the weights first, then the component vectors.
pub fn random_mixed_state(
    n_qubits: usize,
    rank: usize,
    rng: &mut SeededRandomSource,
) -> Result<DensityMatrix> {
    let d = check_qubits(n_qubits)?;
    if rank < 1 || rank > d {
        return Err(Error::param(format!("rank {rank} outside [1, {d}]")));
    }
    let weights = rng.simplex(rank);
    let mut acc = CMatrix::zeros(d, d);
    for w in weights {
        let v = random_pure_vector(n_qubits, rng)?;
        acc += outer(&v, w.sqrt());
    }
    Ok(DensityMatrix::from_raw(n_qubits, linalg::hermitize(&acc)))
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n_qubits: usize,
    /// Row-major (re, im) pairs.
    data: Vec<[f64; 2]>,
}

pub(crate) fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let (r, c) = m.shape();
    (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
        .collect()
}

pub(crate) fn pairs_to_matrix(
    n_qubits: usize,
    pairs: &[[f64; 2]],
) -> std::result::Result<CMatrix, String> {
    let d = 1usize
        .checked_shl(n_qubits as u32)
        .ok_or("qubit count too large")?;
    if pairs.len() != d * d {
        return Err(format!("expected {} entries, found {}", d * d, pairs.len()));
    }
    Ok(CMatrix::from_fn(d, d, |r, c| {
        let [re, im] = pairs[r * d + c];
        Complex64::new(re, im)
    }))
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            n_qubits: self.n_qubits,
            data: matrix_to_pairs(&self.data),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let m = pairs_to_matrix(repr.n_qubits, &repr.data).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::purity;

    #[test]
    fn pure_state_has_unit_purity() {
        let mut rng = SeededRandomSource::new(11);
        let rho = random_pure_state(1, &mut rng).unwrap();
        assert!((purity(&rho) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_states_satisfy_invariants() {
        let mut rng = SeededRandomSource::new(5);
        random_pure_state(3, &mut rng).unwrap().validate().unwrap();
        random_mixed_state(3, 5, &mut rng)
            .unwrap()
            .validate()
            .unwrap();
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let a = random_pure_state(2, &mut SeededRandomSource::new(7)).unwrap();
        let b = random_pure_state(2, &mut SeededRandomSource::new(7)).unwrap();
        let bits = |m: &DensityMatrix| {
            m.matrix()
                .iter()
                .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn mixed_rank_one_is_pure_and_full_rank_is_not_more_than_pure() {
        let mut rng = SeededRandomSource::new(9);
        let r1 = random_mixed_state(1, 1, &mut rng).unwrap();
        assert!((purity(&r1) - 1.0).abs() < 1e-10);
        let r4 = random_mixed_state(2, 4, &mut rng).unwrap();
        assert!(purity(&r4) <= 1.0 + 1e-12);
        assert!(purity(&r4) < 1.0);
    }

    #[test]
    fn mixed_state_matches_explicit_mixture() {
        let seed = 21;
        let rho = random_mixed_state(1, 2, &mut SeededRandomSource::new(seed)).unwrap();
        // Replay the documented draw order and sum the projectors by hand.
        let mut rng = SeededRandomSource::new(seed);
        let w = rng.simplex(2);
        let v0 = random_pure_vector(1, &mut rng).unwrap();
        let v1 = random_pure_vector(1, &mut rng).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = v0[r] * v0[c].conj() * w[0] + v1[r] * v1[c].conj() * w[1];
            }
        }
        let a = linalg::eigenvalues_hermitian(rho.matrix());
        let b = linalg::eigenvalues_hermitian(&m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_out_of_range_is_rejected() {
        let mut rng = SeededRandomSource::new(1);
        assert!(matches!(
            random_mixed_state(1, 3, &mut rng),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            random_mixed_state(1, 0, &mut rng),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn zero_qubits_is_a_dimension_error() {
        let mut rng = SeededRandomSource::new(1);
        assert!(matches!(
            random_pure_state(0, &mut rng),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            random_pure_state(64, &mut rng),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn json_round_trip_validates() {
        let rho = random_mixed_state(1, 2, &mut SeededRandomSource::new(4)).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(rho, back);
        let bad = r#"{"n_qubits":1,"data":[[1,0],[0,0],[0,0],[1,0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(bad).is_err());
    }
}
