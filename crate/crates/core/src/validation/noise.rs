use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DistanceOracle;
use crate::dataset::fmt_f64;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{
    random_pure_state, DensityMatrix, MixedUnitaryChannel, NamedGate, PauliLetter, PauliString,
    UnitaryGate,
};
use crate::rng::{derive_seed_path, SeededRandomSource};

pub const DEFAULT_NOISE_P: f64 = 0.1;
pub const DEFAULT_NOISE_THETA: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    BitFlip,
    Phase,
    Depolarizing,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [
        NoiseKind::BitFlip,
        NoiseKind::Phase,
        NoiseKind::Depolarizing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::BitFlip => "bit_flip",
            NoiseKind::Phase => "phase",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bit_flip" | "bitflip" | "x" => Ok(NoiseKind::BitFlip),
            "phase" | "phase_flip" | "z" => Ok(NoiseKind::Phase),
            "depolarizing" | "depolarising" | "pauli" => Ok(NoiseKind::Depolarizing),
            _ => Err(Error::param(format!("unknown noise kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Total error probability.
    pub p: f64,
    /// Rotation angle of the bit-flip and phase components.
    pub theta: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind) -> Self {
        Self {
            kind,
            p: DEFAULT_NOISE_P,
            theta: DEFAULT_NOISE_THETA,
        }
    }

    /// The induced channel on `n_qubits`. Bit-flip and phase noise rotate one
    /// qubit, chosen uniformly; depolarizing noise applies one of `3n`
    /// Pauli strings drawn uniformly from the non-identity ones.
    pub fn channel(
        &self,
        n_qubits: usize,
        rng: &mut SeededRandomSource,
    ) -> Result<MixedUnitaryChannel> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::param(format!(
                "noise probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::param("rotation angle must be finite"));
        }
        let mut comps = vec![(1.0 - self.p, UnitaryGate::identity(n_qubits)?)];
        match self.kind {
            NoiseKind::BitFlip | NoiseKind::Phase => {
                let letter = if self.kind == NoiseKind::BitFlip {
                    PauliLetter::X
                } else {
                    PauliLetter::Z
                };
                for k in 0..n_qubits {
                    let mut letters = vec![PauliLetter::I; n_qubits];
                    letters[k] = letter;
                    comps.push((
                        self.p / n_qubits as f64,
                        pauli_rotation(&PauliString::new(letters), self.theta),
                    ));
                }
            }
            NoiseKind::Depolarizing => {
                let m = 3 * n_qubits;
                let total = 1usize << (2 * n_qubits);
                for _ in 0..m {
                    let p = PauliString::from_index(n_qubits, 1 + rng.index(total - 1));
                    comps.push((
                        self.p / m as f64,
                        UnitaryGate::from_raw(n_qubits, p.matrix()),
                    ));
                }
            }
        }
        MixedUnitaryChannel::new(comps)
    }
}

/// exp(−iθP/2) = cos(θ/2)·I − i·sin(θ/2)·P
pub fn pauli_rotation(p: &PauliString, theta: f64) -> UnitaryGate {
    let n = p.n_qubits();
    let d = 1usize << n;
    let (s, c) = (theta / 2.0).sin_cos();
    let m: CMatrix = CMatrix::identity(d, d).scale(c) - p.matrix() * (linalg::I * s);
    UnitaryGate::from_raw(n, m)
}

/// Lower estimate of the gate error rate
/// `(1/n)·max_ρ D(UρU†, U E(ρ) U†)`, maximizing over `n_states` random pure
/// states drawn in sequence from `rng`.
pub fn gate_error_rate(
    u: &UnitaryGate,
    ch: &MixedUnitaryChannel,
    n_states: usize,
    rng: &mut SeededRandomSource,
) -> Result<f64> {
    gate_error_rate_with(u, ch, n_states, &DistanceOracle::True, rng)
}

pub fn gate_error_rate_with(
    u: &UnitaryGate,
    ch: &MixedUnitaryChannel,
    n_states: usize,
    oracle: &DistanceOracle,
    rng: &mut SeededRandomSource,
) -> Result<f64> {
    if n_states == 0 {
        return Err(Error::param("n_states must be at least 1"));
    }
    let n = u.n_qubits();
    if ch.n_qubits() != n {
        return Err(Error::param(format!(
            "gate acts on {n} qubits, channel on {}",
            ch.n_qubits()
        )));
    }
    let pairs = (0..n_states)
        .map(|_| {
            let rho = random_pure_state(n, rng)?;
            Ok((rho.conjugate_by(u)?, ch.apply(&rho)?.conjugate_by(u)?))
        })
        .collect::<Result<Vec<(DensityMatrix, DensityMatrix)>>>()?;
    let d = oracle.distances(&pairs)?;
    Ok(d.into_iter().fold(f64::NEG_INFINITY, f64::max) / n as f64)
}

/// Error rates for every (gate, noise) cell; rows are gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSensitivityReport {
    pub gates: Vec<String>,
    pub noises: Vec<NoiseSpec>,
    pub n_states: usize,
    pub seed: u64,
    pub values: Vec<Vec<f64>>,
}

impl GateSensitivityReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let header: Vec<String> = std::iter::once("gate".to_string())
            .chain(self.noises.iter().map(|n| n.kind.to_string()))
            .collect();
        w.write_record(&header)?;
        for (g, row) in self.gates.iter().zip(&self.values) {
            w.write_record(std::iter::once(g.clone()).chain(row.iter().map(|&v| fmt_f64(v))))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cell `(i, j)` draws its channel and states from `derive_seed_path(seed, [i, j])`.
pub fn gate_noise_sensitivity(
    gates: &[NamedGate],
    noises: &[NoiseSpec],
    oracle: &DistanceOracle,
    n_states: usize,
    seed: u64,
) -> Result<GateSensitivityReport> {
    let values = gates
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let u = g.unitary()?;
            noises
                .iter()
                .enumerate()
                .map(|(j, noise)| {
                    let mut rng =
                        SeededRandomSource::new(derive_seed_path(seed, &[i as u64, j as u64]));
                    let ch = noise.channel(u.n_qubits(), &mut rng)?;
                    gate_error_rate_with(&u, &ch, n_states, oracle, &mut rng)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GateSensitivityReport {
        gates: gates.iter().map(|g| g.to_string()).collect(),
        noises: noises.to_vec(),
        n_states,
        seed,
        values,
    })
}
