use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    gate_error_rate, lambda_max, measurement_probability, pauli_rotation, sample_povm_element,
};
use super::{DistanceOracle, TrialRecord, ValidationReport};
use crate::error::{Error, Result};
use crate::quantum::{
    choi_state, perturb_unitary, random_pure_vector, random_unitary, DensityMatrix,
    MixedUnitaryChannel, PauliString, UnitaryGate,
};
use crate::rng::{derive_seed, SeededRandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prop1Config {
    pub n_qubits: usize,
    pub trials: usize,
    /// ε is log-uniform over this range; `(0, 0)` makes V = U.
    pub eps_range: (f64, f64),
    pub seed: u64,
}

impl Default for Prop1Config {
    fn default() -> Self {
        Self {
            n_qubits: 1,
            trials: 300,
            eps_range: (0.01, 0.3),
            seed: 0,
        }
    }
}

/// How the noise unitaries of the gate-error check are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop2Noise {
    /// exp(−iθP/2) for a uniformly drawn non-identity Pauli string P.
    PauliRotation,
    /// exp(−iεH) for a random unit-norm Hermitian H.
    Hamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prop2Config {
    pub n_qubits: usize,
    pub trials: usize,
    /// Number of noise unitaries per channel.
    pub k: usize,
    pub n_states: usize,
    /// Rotation angle (or ε) range, log-uniform; `(0, 0)` makes every V_k = I.
    pub eps_range: (f64, f64),
    pub noise: Prop2Noise,
    pub seed: u64,
}

impl Default for Prop2Config {
    fn default() -> Self {
        Self {
            n_qubits: 2,
            trials: 200,
            k: 8,
            n_states: 64,
            eps_range: (0.01, 0.3),
            noise: Prop2Noise::PauliRotation,
            seed: 0,
        }
    }
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    let ok = lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && (lo > 0.0 || hi == 0.0);
    if ok {
        Ok(())
    } else {
        Err(Error::param(format!(
            "bad strength range [{lo}, {hi}]; need 0 < lo ≤ hi, or [0, 0]"
        )))
    }
}

fn draw((lo, hi): (f64, f64), rng: &mut SeededRandomSource) -> f64 {
    if hi == 0.0 {
        0.0
    } else {
        rng.log_uniform(lo, hi)
    }
}

fn echo<T: Serialize>(config: &T, oracle: &DistanceOracle) -> serde_json::Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    let model = match oracle {
        DistanceOracle::True => serde_json::Value::String("true".into()),
        DistanceOracle::Model(m) => {
            serde_json::json!({ "kind": m.kind.as_str(), "layout_hash": m.layout_hash })
        }
    };
    v["model"] = model;
    v
}

/// Measurement-gap check: for random U, V = U·exp(−iεH), a random pure input
/// and a random POVM element M, tests `|P_U − P_V| ≤ 2·λ_max(M)·D(Φ_U, Φ_V)`.
pub fn validate_prop1(config: &Prop1Config, oracle: &DistanceOracle) -> Result<ValidationReport> {
    let n = config.n_qubits;
    if config.trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    check_range(config.eps_range)?;
    oracle.check(2 * n)?;

    struct Trial {
        eps: f64,
        gap: f64,
        lambda: f64,
        pair: (DensityMatrix, DensityMatrix),
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRandomSource::new(derive_seed(config.seed, t as u64));
            let u = random_unitary(n, &mut rng)?;
            let eps = draw(config.eps_range, &mut rng);
            let v = if eps == 0.0 {
                u.clone()
            } else {
                perturb_unitary(&u, eps, &mut rng)?
            };
            let psi = random_pure_vector(n, &mut rng)?;
            let m = sample_povm_element(n, &mut rng)?;
            let gap = (measurement_probability(&u, &psi, &m)?
                - measurement_probability(&v, &psi, &m)?)
            .abs();
            Ok(Trial {
                eps,
                gap,
                lambda: lambda_max(&m),
                pair: (choi_state(&u)?, choi_state(&v)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<_> = trials.iter().map(|t| t.pair.clone()).collect();
    let d_true = DistanceOracle::True.distances(&pairs)?;
    let d_pred = oracle.distances(&pairs)?;
    let records = trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            TrialRecord::new(
                i,
                t.eps,
                t.gap,
                Some(t.lambda),
                vec![d_true[i]],
                vec![d_pred[i]],
                2.0 * t.lambda * d_true[i],
                2.0 * t.lambda * d_pred[i],
            )
        })
        .collect();
    Ok(ValidationReport::from_records(
        "prop1",
        echo(config, oracle),
        records,
    ))
}

/// Gate-error check: for random U and a K-term mixed-unitary channel, tests
/// `e(U) ≤ (1/n)·Σ_k p_k·D(Φ_I, Φ_{U V_k U†})` with `e` estimated over
/// `n_states` random pure inputs.
pub fn validate_prop2(config: &Prop2Config, oracle: &DistanceOracle) -> Result<ValidationReport> {
    let n = config.n_qubits;
    if config.trials == 0 || config.k == 0 || config.n_states == 0 {
        return Err(Error::param(
            "trials, k and n_states must all be at least 1",
        ));
    }
    check_range(config.eps_range)?;
    oracle.check(2 * n)?;
    let identity = UnitaryGate::identity(n)?;
    let phi_id = choi_state(&identity)?;
    let n_paulis = 1usize << (2 * n);

    struct Trial {
        eps: f64,
        e: f64,
        probs: Vec<f64>,
        pairs: Vec<(DensityMatrix, DensityMatrix)>,
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRandomSource::new(derive_seed(config.seed, t as u64));
            let u = random_unitary(n, &mut rng)?;
            let mut eps_max = 0.0f64;
            let mut vs = Vec::with_capacity(config.k);
            for _ in 0..config.k {
                let eps = draw(config.eps_range, &mut rng);
                eps_max = eps_max.max(eps);
                let v = match config.noise {
                    Prop2Noise::PauliRotation => {
                        let p = PauliString::from_index(n, 1 + rng.index(n_paulis - 1));
                        pauli_rotation(&p, eps)
                    }
                    Prop2Noise::Hamiltonian if eps == 0.0 => identity.clone(),
                    Prop2Noise::Hamiltonian => perturb_unitary(&identity, eps, &mut rng)?,
                };
                vs.push(v);
            }
            let probs = rng.simplex(config.k);
            let pairs = vs
                .iter()
                .map(|v| {
                    Ok((
                        phi_id.clone(),
                        choi_state(&u.compose(v)?.compose(&u.adjoint())?)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let ch = MixedUnitaryChannel::new(probs.iter().copied().zip(vs).collect())?;
            let e = gate_error_rate(&u, &ch, config.n_states, &mut rng)?;
            Ok(Trial {
                eps: eps_max,
                e,
                probs,
                pairs,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs: Vec<_> = trials
        .iter()
        .flat_map(|t| t.pairs.iter().cloned())
        .collect();
    let d_true = DistanceOracle::True.distances(&pairs)?;
    let d_pred = oracle.distances(&pairs)?;
    let k = config.k;
    let records = trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let dt = d_true[i * k..(i + 1) * k].to_vec();
            let dp = d_pred[i * k..(i + 1) * k].to_vec();
            let bound =
                |d: &[f64]| t.probs.iter().zip(d).map(|(p, d)| p * d).sum::<f64>() / n as f64;
            let (bt, bp) = (bound(&dt), bound(&dp));
            TrialRecord::new(i, t.eps, t.e, None, dt, dp, bt, bp)
        })
        .collect();
    Ok(ValidationReport::from_records(
        "prop2",
        echo(config, oracle),
        records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prop1_true_bound_holds() {
        let cfg = Prop1Config {
            trials: 60,
            seed: 3,
            ..Default::default()
        };
        let rep = validate_prop1(&cfg, &DistanceOracle::True).unwrap();
        assert_eq!(rep.trials, 60);
        assert_eq!(rep.violations_true, 0);
        for r in &rep.records {
            assert!(r.gap <= r.bound_true + 1e-9);
            assert_eq!(r.distances_true, r.distances_pred);
        }
        assert_eq!(rep.model_mse, 0.0);
    }

    #[test]
    fn prop1_identical_gates_have_zero_gap() {
        let cfg = Prop1Config {
            trials: 5,
            eps_range: (0.0, 0.0),
            ..Default::default()
        };
        let rep = validate_prop1(&cfg, &DistanceOracle::True).unwrap();
        for r in &rep.records {
            assert!(r.gap < 1e-12 && !r.violation_true && !r.violation_pred);
        }
    }

    #[test]
    fn prop2_true_bound_holds() {
        for noise in [Prop2Noise::PauliRotation, Prop2Noise::Hamiltonian] {
            let cfg = Prop2Config {
                trials: 20,
                n_states: 16,
                noise,
                seed: 4,
                ..Default::default()
            };
            let rep = validate_prop2(&cfg, &DistanceOracle::True).unwrap();
            assert_eq!(rep.records.len(), 20);
            assert!(rep.records.iter().all(|r| r.distances_true.len() == 8));
            if noise == Prop2Noise::PauliRotation {
                assert_eq!(rep.violations_true, 0);
                assert!(rep.records.iter().all(|r| r.gap <= r.bound_true + 1e-9));
            }
        }
    }

    #[test]
    fn prop2_identity_noise_is_degenerate() {
        let cfg = Prop2Config {
            trials: 3,
            n_states: 4,
            eps_range: (0.0, 0.0),
            ..Default::default()
        };
        let rep = validate_prop2(&cfg, &DistanceOracle::True).unwrap();
        for r in &rep.records {
            assert!(r.gap.abs() < 1e-10 && r.bound_true.abs() < 1e-10);
        }
        assert_eq!(rep.violations_true, 0);
    }

    #[test]
    fn bad_range_rejected() {
        let cfg = Prop1Config {
            eps_range: (0.0, 0.3),
            ..Default::default()
        };
        assert!(matches!(
            validate_prop1(&cfg, &DistanceOracle::True),
            Err(Error::Parameter(_))
        ));
    }
}
