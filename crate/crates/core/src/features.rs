//! Fixed-order real feature vectors for an ordered state pair (ρ, σ).
//!
//! Layout `v1`, in order:
//!
//! | block              | length     | contents                                                  |
//! |--------------------|------------|-----------------------------------------------------------|
//! | `pauli`            | 4·4^n      | per Pauli string: ⟨P⟩ρ, ⟨P⟩σ, difference, product         |
//! | `moment`           | 8          | M1ρ, M1σ, M2ρ, M2σ, Tr(ρσ), M3ρ, M3σ, M2ρ again           |
//! | `fidelity`         | 1          |                                                           |
//! | `entropy`          | 4          | S(ρ), S(σ), L(ρ), L(σ)                                    |
//! | `relative_entropy` | 2          | D(ρ‖σ), D(σ‖ρ)                                            |
//! | `eigen_stats`      | 10         | mean, std, max, min, effective rank; ρ then σ             |
//! | `partial_trace`    | 0, 8 or 16 | 1\|(n−1) cut for n ≥ 2, plus 2\|(n−2) for n ≥ 4           |

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantum::{self, partial_trace, pauli_strings, DensityMatrix, EigenStats, Spectrum};

pub const LAYOUT_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub name: String,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub version: String,
    pub n_qubits: usize,
    pub blocks: Vec<FeatureBlock>,
    pub total_length: usize,
}

impl FeatureLayout {
    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Canonical JSON text; the hash is taken over exactly these bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layout serializes")
    }

    /// Hex SHA-256 of [`FeatureLayout::to_json`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Checks the structural invariants, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        let canonical = layout_for(self.n_qubits)?;
        if *self != canonical {
            return Err(Error::compat(format!(
                "layout for {} qubits does not match canonical {LAYOUT_VERSION} layout",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Cuts of the partial-trace block: number of qubits in subsystem A.
    fn cuts(&self) -> Vec<usize> {
        partial_trace_cuts(self.n_qubits)
    }
}

fn partial_trace_cuts(n: usize) -> Vec<usize> {
    match n {
        0 | 1 => vec![],
        2 | 3 => vec![1],
        _ => vec![1, 2],
    }
}

/// Canonical `v1` layout for pairs of `n`-qubit states.
pub fn layout_for(n: usize) -> Result<FeatureLayout> {
    if n < 1 {
        return Err(Error::param("feature layout needs at least one qubit"));
    }
    let pauli = 4usize
        .checked_pow(n as u32)
        .and_then(|p| p.checked_mul(4))
        .ok_or_else(|| Error::param(format!("{n} qubits overflows the Pauli block")))?;
    let sizes = [
        ("pauli", pauli),
        ("moment", 8),
        ("fidelity", 1),
        ("entropy", 4),
        ("relative_entropy", 2),
        ("eigen_stats", 10),
        ("partial_trace", 8 * partial_trace_cuts(n).len()),
    ];
    let mut offset = 0;
    let mut blocks = Vec::with_capacity(sizes.len());
    for (name, length) in sizes {
        if length == 0 {
            continue;
        }
        blocks.push(FeatureBlock {
            name: name.to_string(),
            offset,
            length,
        });
        offset += length;
    }
    Ok(FeatureLayout {
        version: LAYOUT_VERSION.to_string(),
        n_qubits: n,
        blocks,
        total_length: offset,
    })
}

/// Human-readable, unique column names in layout order.
pub fn feature_names(layout: &FeatureLayout) -> Vec<String> {
    let mut names = Vec::with_capacity(layout.total_length);
    if let Ok(strings) = pauli_strings(layout.n_qubits) {
        for p in strings.iter() {
            let label = p.label();
            for col in ["exp_rho", "exp_sigma", "diff", "prod"] {
                names.push(format!("pauli[{label}].{col}"));
            }
        }
    }
    for m in [
        "M1_rho",
        "M1_sigma",
        "M2_rho",
        "M2_sigma",
        "M_cross",
        "M3_rho",
        "M3_sigma",
        "M2_rho_dup",
    ] {
        names.push(format!("moment.{m}"));
    }
    names.push("fidelity".to_string());
    for e in ["S_rho", "S_sigma", "L_rho", "L_sigma"] {
        names.push(format!("entropy.{e}"));
    }
    names.push("relent.D_rho_sigma".to_string());
    names.push("relent.D_sigma_rho".to_string());
    for state in ["rho", "sigma"] {
        for s in ["mean", "std", "max", "min", "eff_rank"] {
            names.push(format!("eig.{s}_{state}"));
        }
    }
    let n = layout.n_qubits;
    for k in layout.cuts() {
        for state in ["rho", "sigma"] {
            for q in ["purity_A", "S_A", "purity_B", "S_B"] {
                names.push(format!("ptrace.{k}|{}.{q}_{state}", n - k));
            }
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Extracts the layout's features for the ordered pair (ρ, σ).
pub fn extract_features(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    layout: &FeatureLayout,
) -> Result<FeatureVector> {
    rho.same_shape(sigma)?;
    if rho.n_qubits() != layout.n_qubits {
        return Err(Error::param(format!(
            "states have {} qubits but the layout is for {}",
            rho.n_qubits(),
            layout.n_qubits
        )));
    }
    let mut v = Vec::with_capacity(layout.total_length);

    for p in pauli_strings(layout.n_qubits)?.iter() {
        let a = p.trace_with(rho.matrix()).re;
        let b = p.trace_with(sigma.matrix()).re;
        v.extend_from_slice(&[a, b, a - b, a * b]);
    }

    let m2r = quantum::purity(rho);
    let m2s = quantum::purity(sigma);
    let cross = linalg::trace_product(rho.matrix(), sigma.matrix()).re;
    v.extend_from_slice(&[
        rho.trace(),
        sigma.trace(),
        m2r,
        m2s,
        cross,
        quantum::moment(rho, 3),
        quantum::moment(sigma, 3),
        m2r,
    ]);

    let sr = Spectrum::of(rho);
    let ss = Spectrum::of(sigma);
    v.push(sr.fidelity_with(sigma));
    v.extend_from_slice(&[sr.entropy(), ss.entropy(), 1.0 - m2r, 1.0 - m2s]);
    v.push(sr.relative_entropy_to(&ss));
    v.push(ss.relative_entropy_to(&sr));

    for s in [sr.stats(), ss.stats()] {
        let EigenStats {
            mean,
            std,
            max,
            min,
            effective_rank,
        } = s;
        v.extend_from_slice(&[mean, std, max, min, effective_rank]);
    }

    let n = layout.n_qubits;
    for k in layout.cuts() {
        let a: Vec<usize> = (0..k).collect();
        let b: Vec<usize> = (k..n).collect();
        for state in [rho, sigma] {
            let ra = partial_trace(state, &a)?;
            let rb = partial_trace(state, &b)?;
            v.extend_from_slice(&[
                quantum::purity(&ra),
                quantum::von_neumann_entropy(&ra),
                quantum::purity(&rb),
                quantum::von_neumann_entropy(&rb),
            ]);
        }
    }

    debug_assert_eq!(v.len(), layout.total_length);
    Ok(FeatureVector { values: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{choi_state, random_mixed_state, random_pure_state, random_unitary};
    use crate::rng::SeededRandomSource;
    use std::collections::HashSet;

    #[test]
    fn layout_lengths() {
        assert_eq!(layout_for(1).unwrap().total_length, 41);
        assert_eq!(layout_for(2).unwrap().total_length, 97);
        let l3 = layout_for(3).unwrap();
        assert_eq!(l3.block("pauli").unwrap().length, 256);
        assert_eq!(l3.total_length, 289);
        assert_eq!(layout_for(4).unwrap().total_length, 1065);
        assert!(layout_for(0).is_err());
    }

    #[test]
    fn blocks_are_contiguous() {
        for n in 1..=5 {
            let l = layout_for(n).unwrap();
            let mut at = 0;
            for b in &l.blocks {
                assert_eq!(b.offset, at);
                assert!(b.length > 0);
                at += b.length;
            }
            assert_eq!(at, l.total_length);
        }
    }

    #[test]
    fn names_are_unique_and_sized() {
        for n in 1..=4 {
            let l = layout_for(n).unwrap();
            let names = feature_names(&l);
            assert_eq!(names.len(), l.total_length);
            assert_eq!(names.iter().collect::<HashSet<_>>().len(), names.len());
        }
        let l1 = layout_for(1).unwrap();
        assert_eq!(feature_names(&l1)[0], "pauli[I].exp_rho");
        let names = feature_names(&layout_for(3).unwrap());
        assert!(names.contains(&"pauli[XZY].diff".to_string()));
        assert!(names.contains(&"moment.M2_rho".to_string()));
        assert!(names.contains(&"ptrace.1|2.S_A_sigma".to_string()));
    }

    #[test]
    fn hash_is_stable_and_layout_specific() {
        assert_eq!(layout_for(2).unwrap().hash(), layout_for(2).unwrap().hash());
        assert_ne!(layout_for(2).unwrap().hash(), layout_for(3).unwrap().hash());
        let back: FeatureLayout = serde_json::from_str(&layout_for(3).unwrap().to_json()).unwrap();
        back.validate().unwrap();
    }

    #[test]
    fn orthogonal_pair_z_columns() {
        let l = layout_for(1).unwrap();
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        let f = extract_features(&zero, &one, &l).unwrap();
        // Z is the fourth Pauli.
        assert_eq!(&f.values[12..16], &[1.0, -1.0, 2.0, -1.0]);
    }

    #[test]
    fn identical_pair() {
        let mut rng = SeededRandomSource::new(3);
        let l = layout_for(2).unwrap();
        let rho = random_mixed_state(2, 2, &mut rng).unwrap();
        let f = extract_features(&rho, &rho, &l).unwrap();
        let names = feature_names(&l);
        for (name, x) in names.iter().zip(&f.values) {
            if name.ends_with(".diff") {
                assert_eq!(*x, 0.0);
            }
            if name.starts_with("relent.") {
                assert!(x.abs() < 1e-8, "{name} = {x}");
            }
            if name.starts_with("moment.M1") {
                assert!((x - 1.0).abs() < 1e-10);
            }
        }
        let fid = l.block("fidelity").unwrap().offset;
        assert!((f.values[fid] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let l = layout_for(2).unwrap();
        let a = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(extract_features(&a, &a, &l).is_err());
        let b = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(extract_features(&a, &b, &l).is_err());
    }

    #[test]
    fn choi_pairs_are_finite() {
        let mut rng = SeededRandomSource::new(5);
        let l = layout_for(4).unwrap();
        let a = choi_state(&random_unitary(2, &mut rng).unwrap()).unwrap();
        let b = choi_state(&random_unitary(2, &mut rng).unwrap()).unwrap();
        let f = extract_features(&a, &b, &l).unwrap();
        assert_eq!(f.len(), 1065);
        assert!(f.values.iter().all(|x| x.is_finite()));
        let c = random_pure_state(4, &mut rng).unwrap();
        assert!(extract_features(&a, &c, &l)
            .unwrap()
            .values
            .iter()
            .all(|x| x.is_finite()));
    }
}
