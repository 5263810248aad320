use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{check_qubits, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::Complex64;

/// Largest qubit count whose basis is materialized as dense matrices
/// (16^n complex entries in total).
const MATERIALIZE_MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [
        PauliLetter::I,
        PauliLetter::X,
        PauliLetter::Y,
        PauliLetter::Z,
    ];

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, letter 0 acting on qubit 0.
///
/// Stored in bit-mask form: `P|c⟩ = i^{#Y} (-1)^{popcount(c & z)} |c ⊕ x⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
    x_mask: usize,
    z_mask: usize,
    n_y: u32,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Self {
        let n = letters.len();
        let (mut x_mask, mut z_mask, mut n_y) = (0usize, 0usize, 0u32);
        for (q, l) in letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => x_mask |= bit,
                PauliLetter::Z => z_mask |= bit,
                PauliLetter::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    n_y += 1;
                }
            }
        }
        Self {
            letters,
            x_mask,
            z_mask,
            n_y,
        }
    }

    /// Lexicographic rank with I<X<Y<Z, leftmost letter most significant.
    pub fn from_index(n_qubits: usize, index: usize) -> Self {
        let letters = (0..n_qubits)
            .map(|q| PauliLetter::ALL[(index >> (2 * (n_qubits - 1 - q))) & 3])
            .collect();
        Self::new(letters)
    }

    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, &l| acc * 4 + l as usize)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|l| l.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    fn phase(&self, column: usize) -> Complex64 {
        let sign = if (column & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let iy = match self.n_y % 4 {
            0 => linalg::ONE,
            1 => linalg::I,
            2 => -linalg::ONE,
            _ => -linalg::I,
        };
        iy * sign
    }

    pub fn matrix(&self) -> CMatrix {
        let d = 1usize << self.n_qubits();
        let mut m = CMatrix::zeros(d, d);
        for c in 0..d {
            m[(c ^ self.x_mask, c)] = self.phase(c);
        }
        m
    }

    /// Tr(M P) for any d×d matrix, O(d).
    pub fn trace_with(&self, m: &CMatrix) -> Complex64 {
        let d = m.nrows();
        let mut acc = linalg::ZERO;
        for c in 0..d {
            acc += self.phase(c) * m[(c, c ^ self.x_mask)];
        }
        acc
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The full 4^n-element Pauli basis with dense matrices.
#[derive(Debug)]
pub struct PauliBasis {
    pub strings: Arc<Vec<PauliString>>,
    pub matrices: Vec<CMatrix>,
}

impl PauliBasis {
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

type Cache<T> = OnceLock<Mutex<HashMap<usize, Arc<T>>>>;

static STRINGS: Cache<Vec<PauliString>> = OnceLock::new();
static BASES: Cache<PauliBasis> = OnceLock::new();

fn memoized<T>(
    cache: &'static Cache<T>,
    n: usize,
    build: impl FnOnce() -> Result<T>,
) -> Result<Arc<T>> {
    let map = cache.get_or_init(Default::default);
    if let Some(hit) = map.lock().expect("pauli cache poisoned").get(&n) {
        return Ok(hit.clone());
    }
    let built = Arc::new(build()?);
    Ok(map
        .lock()
        .expect("pauli cache poisoned")
        .entry(n)
        .or_insert(built)
        .clone())
}

/// All 4^n Pauli strings in lexicographic order (memoized).
pub fn pauli_strings(n_qubits: usize) -> Result<Arc<Vec<PauliString>>> {
    check_qubits(n_qubits)?;
    memoized(&STRINGS, n_qubits, || {
        Ok((0..1usize << (2 * n_qubits))
            .map(|i| PauliString::from_index(n_qubits, i))
            .collect())
    })
}

/// All 4^n Pauli strings with materialized matrices (memoized).
pub fn pauli_basis(n_qubits: usize) -> Result<Arc<PauliBasis>> {
    check_qubits(n_qubits)?;
    if n_qubits > MATERIALIZE_MAX_QUBITS {
        return Err(Error::dim(format!(
            "materializing the {n_qubits}-qubit Pauli basis exceeds the {MATERIALIZE_MAX_QUBITS}-qubit limit"
        )));
    }
    memoized(&BASES, n_qubits, || {
        let strings = pauli_strings(n_qubits)?;
        let matrices = strings.iter().map(PauliString::matrix).collect();
        Ok(PauliBasis { strings, matrices })
    })
}

/// Re Tr(ρ P).
pub fn expectation(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    if rho.n_qubits() != p.n_qubits() {
        return Err(Error::param(format!(
            "Pauli string on {} qubits applied to a {}-qubit state",
            p.n_qubits(),
            rho.n_qubits()
        )));
    }
    let v = p.trace_with(rho.matrix());
    debug_assert!(v.im.abs() <= 1e-10, "imaginary expectation {}", v.im);
    Ok(v.re)
}
