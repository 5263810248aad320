use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{check_qubits, UnitaryGate};
use crate::rng::SeededRandomSource;
use crate::Complex64;

/// Random POVM element `s·A†A / λ_max(A†A)` with `s` uniform in (0, 1].
pub fn sample_povm_element(n_qubits: usize, rng: &mut SeededRandomSource) -> Result<CMatrix> {
    let s = 1.0 - rng.uniform();
    povm_element_with_scale(n_qubits, s, rng)
}

/// As [`sample_povm_element`] with the top eigenvalue fixed to `s`.
pub fn povm_element_with_scale(
    n_qubits: usize,
    s: f64,
    rng: &mut SeededRandomSource,
) -> Result<CMatrix> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param(format!(
            "POVM scale must lie in (0, 1], got {s}"
        )));
    }
    let d = check_qubits(n_qubits)?;
    let a = CMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let m = linalg::hermitize(&(a.adjoint() * &a));
    let top = *linalg::eigenvalues_hermitian(&m)
        .last()
        .expect("nonempty spectrum");
    Ok(m.scale(s / top))
}

pub fn lambda_max(m: &CMatrix) -> f64 {
    linalg::eigenvalues_hermitian(m)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// ⟨ψ|U† M U|ψ⟩.
pub fn measurement_probability(u: &UnitaryGate, psi: &[Complex64], m: &CMatrix) -> Result<f64> {
    let d = u.dim();
    if psi.len() != d || m.nrows() != d || m.ncols() != d {
        return Err(Error::param(format!(
            "gate dimension {d}, state length {}, POVM element {}x{}",
            psi.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let phi = u.matrix() * nalgebra::DVector::from_column_slice(psi);
    let v = phi.dotc(&(m * &phi));
    debug_assert!(v.im.abs() <= 1e-10, "imaginary part {}", v.im);
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{random_pure_vector, random_unitary};

    #[test]
    fn povm_is_psd_with_bounded_top() {
        let mut rng = SeededRandomSource::new(3);
        for n in 1..=3 {
            for _ in 0..20 {
                let m = sample_povm_element(n, &mut rng).unwrap();
                let ev = linalg::eigenvalues_hermitian(&m);
                assert!(ev[0] >= -1e-10);
                assert!(ev[ev.len() - 1] > 0.0 && ev[ev.len() - 1] <= 1.0 + 1e-12);
            }
        }
        let m = povm_element_with_scale(2, 1.0, &mut rng).unwrap();
        assert!((lambda_max(&m) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn probability_examples() {
        let mut rng = SeededRandomSource::new(4);
        let u = random_unitary(2, &mut rng).unwrap();
        let psi = random_pure_vector(2, &mut rng).unwrap();
        let id = CMatrix::identity(4, 4);
        assert!((measurement_probability(&u, &psi, &id).unwrap() - 1.0).abs() < 1e-12);

        let one = UnitaryGate::identity(1).unwrap();
        let zero = [linalg::ONE, linalg::ZERO];
        let proj = CMatrix::from_fn(2, 2, |r, c| {
            if r == 0 && c == 0 {
                linalg::ONE
            } else {
                linalg::ZERO
            }
        });
        assert!((measurement_probability(&one, &zero, &proj).unwrap() - 1.0).abs() < 1e-15);

        for _ in 0..20 {
            let m = sample_povm_element(2, &mut rng).unwrap();
            let p = measurement_probability(&u, &psi, &m).unwrap();
            assert!(p >= -1e-12 && p <= lambda_max(&m) + 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut rng = SeededRandomSource::new(5);
        let u = random_unitary(2, &mut rng).unwrap();
        let psi = random_pure_vector(1, &mut rng).unwrap();
        let m = CMatrix::identity(4, 4);
        assert!(matches!(
            measurement_probability(&u, &psi, &m),
            Err(Error::Parameter(_))
        ));
    }
}
