use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::state::{matrix_to_pairs, pairs_to_matrix};
use super::{check_qubits, qubits_for_dim, DensityMatrix, INVARIANT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::SeededRandomSource;
use crate::Complex64;

/// A d×d unitary on n qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    n_qubits: usize,
    data: CMatrix,
}

impl UnitaryGate {
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
        let d = data.nrows();
        let dev = linalg::max_abs(&(data.adjoint() * &data - CMatrix::identity(d, d)));
        if dev > INVARIANT_TOL {
            return Err(Error::param(format!(
                "matrix is not unitary (deviation {dev:e})"
            )));
        }
        Ok(Self { n_qubits, data })
    }

    pub(crate) fn from_raw(n_qubits: usize, data: CMatrix) -> Self {
        Self { n_qubits, data }
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let d = check_qubits(n_qubits)?;
        Ok(Self::from_raw(n_qubits, CMatrix::identity(d, d)))
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

    pub fn adjoint(&self) -> UnitaryGate {
        Self::from_raw(self.n_qubits, self.data.adjoint())
    }

    /// self · other
    pub fn compose(&self, other: &UnitaryGate) -> Result<UnitaryGate> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::param(
                "cannot compose gates on different qubit counts",
            ));
        }
        Ok(Self::from_raw(self.n_qubits, &self.data * &other.data))
    }

    /// max |U†U - I|
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        linalg::max_abs(&(self.data.adjoint() * &self.data - CMatrix::identity(d, d)))
    }
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal
/// folded back into Q.
pub fn random_unitary(n_qubits: usize, rng: &mut SeededRandomSource) -> Result<UnitaryGate> {
    let d = check_qubits(n_qubits)?;
    let z = CMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 {
            rc / rc.norm()
        } else {
            linalg::ONE
        };
        q.column_mut(c).iter_mut().for_each(|x| *x *= phase);
    }
    Ok(UnitaryGate::from_raw(n_qubits, q))
}

/// Gaussian Hermitian matrix rescaled to unit spectral norm.
pub fn random_hermitian_unit_norm(
    n_qubits: usize,
    rng: &mut SeededRandomSource,
) -> Result<CMatrix> {
    let d = check_qubits(n_qubits)?;
    let a = CMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let h = linalg::hermitize(&a);
    let eig = linalg::eigenvalues_hermitian(&h);
    let norm = eig[0].abs().max(eig[d - 1].abs());
    Ok(h.unscale(norm))
}

/// U · exp(-i ε H) with H a random unit-norm Hermitian matrix.
pub fn perturb_unitary(
    u: &UnitaryGate,
    strength: f64,
    rng: &mut SeededRandomSource,
) -> Result<UnitaryGate> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::param(format!(
            "perturbation strength must be positive, got {strength}"
        )));
    }
    let h = random_hermitian_unit_norm(u.n_qubits, rng)?;
    let rot = linalg::exp_i_hermitian(&h, strength);
    Ok(UnitaryGate::from_raw(u.n_qubits, &u.data * rot))
}

/// Φ_U = (1/d) Σ_{j,k} |j⟩⟨k| ⊗ U|j⟩⟨k|U†, a pure state on 2n qubits.
pub fn choi_state(u: &UnitaryGate) -> Result<DensityMatrix> {
    let n = 2 * u.n_qubits;
    check_qubits(n)?;
    let d = u.dim();
    let scale = 1.0 / (d as f64).sqrt();
    // |Φ⟩ = Σ_j |j⟩ ⊗ U|j⟩ / √d ; the (j, r) component is U[r, j].
    let mut v = vec![linalg::ZERO; d * d];
    for j in 0..d {
        for r in 0..d {
            v[j * d + r] = u.data[(r, j)];
        }
    }
    Ok(DensityMatrix::from_raw(n, super::state::outer(&v, scale)))
}

/// Gates with fixed matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedGate {
    Identity(usize),
    Swap,
    Cz,
    Cs,
    Cnot,
    Toffoli,
    Fredkin,
}

impl NamedGate {
    pub fn n_qubits(&self) -> usize {
        match self {
            NamedGate::Identity(n) => *n,
            NamedGate::Swap | NamedGate::Cz | NamedGate::Cs | NamedGate::Cnot => 2,
            NamedGate::Toffoli | NamedGate::Fredkin => 3,
        }
    }

    pub fn unitary(&self) -> Result<UnitaryGate> {
        let n = self.n_qubits();
        let d = check_qubits(n)?;
        let m = match self {
            NamedGate::Identity(_) => CMatrix::identity(d, d),
            NamedGate::Swap => permutation(d, |b| match b {
                0b01 => 0b10,
                0b10 => 0b01,
                b => b,
            }),
            NamedGate::Cnot => permutation(d, |b| if b & 0b10 != 0 { b ^ 0b01 } else { b }),
            NamedGate::Cz => diagonal(d, |b| if b == 0b11 { -linalg::ONE } else { linalg::ONE }),
            NamedGate::Cs => diagonal(d, |b| if b == 0b11 { linalg::I } else { linalg::ONE }),
            // |ab c⟩ -> |ab (c ⊕ ab)⟩
            NamedGate::Toffoli => {
                permutation(d, |b| if b & 0b110 == 0b110 { b ^ 0b001 } else { b })
            }
            // |1 b c⟩ -> |1 c b⟩
            NamedGate::Fredkin => permutation(d, |b| match b {
                0b101 => 0b110,
                0b110 => 0b101,
                b => b,
            }),
        };
        Ok(UnitaryGate::from_raw(n, m))
    }

    /// The five gates of the noise-sensitivity study.
    pub fn sensitivity_set() -> [NamedGate; 5] {
        [
            NamedGate::Swap,
            NamedGate::Cz,
            NamedGate::Cs,
            NamedGate::Toffoli,
            NamedGate::Fredkin,
        ]
    }
}

fn permutation(d: usize, f: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for c in 0..d {
        m[(f(c), c)] = linalg::ONE;
    }
    m
}

fn diagonal(d: usize, f: impl Fn(usize) -> Complex64) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| if r == c { f(r) } else { linalg::ZERO })
}

impl fmt::Display for NamedGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedGate::Identity(1) => f.write_str("identity"),
            NamedGate::Identity(n) => write!(f, "identity:{n}"),
            NamedGate::Swap => f.write_str("swap"),
            NamedGate::Cz => f.write_str("cz"),
            NamedGate::Cs => f.write_str("cs"),
            NamedGate::Cnot => f.write_str("cnot"),
            NamedGate::Toffoli => f.write_str("toffoli"),
            NamedGate::Fredkin => f.write_str("fredkin"),
        }
    }
}

impl FromStr for NamedGate {
    type Err = Error;

    /// Accepts `swap`, `cz`, `cs`, `cnot`, `toffoli`, `fredkin`, `identity`
    /// and `identity:N`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "identity" | "id" | "i" => NamedGate::Identity(1),
            "swap" => NamedGate::Swap,
            "cz" => NamedGate::Cz,
            "cs" => NamedGate::Cs,
            "cnot" | "cx" => NamedGate::Cnot,
            "toffoli" | "ccnot" => NamedGate::Toffoli,
            "fredkin" | "cswap" => NamedGate::Fredkin,
            other => match other.strip_prefix("identity:").map(str::parse::<usize>) {
                Some(Ok(n)) if n >= 1 => NamedGate::Identity(n),
                _ => return Err(Error::param(format!("unknown gate '{s}'"))),
            },
        })
    }
}

pub fn named_gate(name: &str) -> Result<UnitaryGate> {
    name.parse::<NamedGate>()?.unitary()
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    n_qubits: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for UnitaryGate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GateRepr {
            n_qubits: self.n_qubits,
            data: matrix_to_pairs(&self.data),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryGate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GateRepr::deserialize(d)?;
        let m = pairs_to_matrix(repr.n_qubits, &repr.data).map_err(serde::de::Error::custom)?;
        UnitaryGate::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{partial_trace, purity, trace_distance};

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = SeededRandomSource::new(2);
        let u = random_unitary(2, &mut rng).unwrap();
        assert!(u.unitarity_error() < 1e-10);
        let u1 = random_unitary(1, &mut rng).unwrap();
        assert!((u1.matrix().determinant().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn haar_second_moment() {
        // E|U_00|^2 = 1/d for Haar measure.
        let mut rng = SeededRandomSource::new(123);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| random_unitary(1, &mut rng).unwrap().matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn perturbation_is_continuous_and_unitary() {
        let mut rng = SeededRandomSource::new(4);
        let u = random_unitary(2, &mut rng).unwrap();
        let eps = 1e-6;
        let v = perturb_unitary(&u, eps, &mut rng).unwrap();
        assert!(linalg::max_abs(&(v.matrix() - u.matrix())) <= 10.0 * eps);
        let v = perturb_unitary(&u, 0.1, &mut rng).unwrap();
        assert!(v.unitarity_error() < 1e-10);
        assert!(perturb_unitary(&u, 0.0, &mut rng).is_err());
    }

    #[test]
    fn perturbed_identity_has_nonzero_choi_distance() {
        let mut rng = SeededRandomSource::new(8);
        let id = UnitaryGate::identity(1).unwrap();
        let v = perturb_unitary(&id, 0.05, &mut rng).unwrap();
        let t = trace_distance(&choi_state(&id).unwrap(), &choi_state(&v).unwrap()).unwrap();
        assert!(t > 0.0);
    }

    #[test]
    fn choi_of_identity_is_bell_projector() {
        let phi = choi_state(&UnitaryGate::identity(1).unwrap()).unwrap();
        // Direct summation of (1/2) Σ |j⟩⟨k| ⊗ |j⟩⟨k|.
        let mut expected = CMatrix::zeros(4, 4);
        for j in 0..2 {
            for k in 0..2 {
                expected[(j * 2 + j, k * 2 + k)] += Complex64::new(0.5, 0.0);
            }
        }
        assert!(linalg::max_abs(&(phi.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn choi_states_are_pure_with_maximally_mixed_marginal() {
        let mut rng = SeededRandomSource::new(6);
        for n in 1..=2 {
            let u = random_unitary(n, &mut rng).unwrap();
            let phi = choi_state(&u).unwrap();
            assert!((purity(&phi) - 1.0).abs() < 1e-10);
            let keep: Vec<usize> = (0..n).collect();
            let reduced = partial_trace(&phi, &keep).unwrap();
            let mm = DensityMatrix::maximally_mixed(n).unwrap();
            assert!(linalg::max_abs(&(reduced.matrix() - mm.matrix())) < 1e-10);
            assert_eq!(trace_distance(&phi, &choi_state(&u).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn named_gate_matrices() {
        let cz = named_gate("cz").unwrap();
        let cs = named_gate("cs").unwrap();
        let expect_cz = [1.0, 1.0, 1.0, -1.0];
        for (i, &d) in expect_cz.iter().enumerate() {
            assert_eq!(cz.matrix()[(i, i)], Complex64::new(d, 0.0));
        }
        assert_eq!(cs.matrix()[(3, 3)], linalg::I);
        assert_eq!(cs.matrix()[(2, 2)], linalg::ONE);
        let swap = named_gate("swap").unwrap();
        let twice = swap.compose(&swap).unwrap();
        assert!(linalg::max_abs(&(twice.matrix() - CMatrix::identity(4, 4))) < 1e-12);
        // Toffoli swaps |110> and |111>; Fredkin swaps |101> and |110>.
        let t = named_gate("toffoli").unwrap();
        assert_eq!(t.matrix()[(7, 6)], linalg::ONE);
        assert_eq!(t.matrix()[(6, 7)], linalg::ONE);
        assert_eq!(t.matrix()[(5, 5)], linalg::ONE);
        let f = named_gate("fredkin").unwrap();
        assert_eq!(f.matrix()[(6, 5)], linalg::ONE);
        assert_eq!(f.matrix()[(5, 6)], linalg::ONE);
        assert_eq!(f.matrix()[(3, 3)], linalg::ONE);
        for g in ["cnot", "identity:3", "toffoli", "fredkin"] {
            assert!(named_gate(g).unwrap().unitarity_error() < 1e-14);
        }
        assert!(matches!(
            named_gate("hadamardish"),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn gate_json_round_trip() {
        let u = random_unitary(1, &mut SeededRandomSource::new(3)).unwrap();
        let back: UnitaryGate = serde_json::from_str(&serde_json::to_string(&u).unwrap()).unwrap();
        assert_eq!(u, back);
    }
}
