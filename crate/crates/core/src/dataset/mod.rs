//! Labeled (features, W1) datasets over random state pairs and gate Choi pairs.

mod io;
mod split;

pub(crate) use io::fmt_f64;
pub use io::{read_dataset, sidecar_path, write_dataset, DatasetMeta};
pub use split::{split_dataset, DEFAULT_FRACTIONS};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, feature_names, layout_for, FeatureLayout};
use crate::quantum::{
    self, choi_state, perturb_unitary, random_mixed_state, random_pure_state, random_unitary,
    trace_distance, DensityMatrix,
};
use crate::rng::{derive_seed, SeededRandomSource};

/// Bisection fallback for [`solve_alpha`].
const BISECTION_STEPS: usize = 60;
/// Tolerance of the closed-form α check.
const ALPHA_TOL: f64 = 1e-9;
/// Resampling attempts per binned sample before giving up.
pub const RETRY_CAP: usize = 50;
/// Bin count used to stratify natural (unbinned) datasets.
pub const NATURAL_STRATA: usize = 10;
/// Stream id of the final row shuffle, disjoint from sample ids.
const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    RandomPure,
    RandomMixed,
    GateChoi,
    MixedConfig,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::RandomPure => "random_pure",
            PairKind::RandomMixed => "random_mixed",
            PairKind::GateChoi => "gate_choi",
            PairKind::MixedConfig => "mixed_config",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "random_pure" | "pure" => Ok(PairKind::RandomPure),
            "random_mixed" | "mixed" => Ok(PairKind::RandomMixed),
            "gate_choi" | "gate" | "choi" => Ok(PairKind::GateChoi),
            "mixed_config" => Ok(PairKind::MixedConfig),
            _ => Err(Error::param(format!(
                "unknown pair kind '{s}' (expected random_pure, random_mixed, gate_choi or mixed_config)"
            ))),
        }
    }
}

/// Where a row's states came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RandomPure,
    RandomMixed,
    GateChoi,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RandomPure => "random_pure",
            Provenance::RandomMixed => "random_mixed",
            Provenance::GateChoi => "gate_choi",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_pure" => Ok(Provenance::RandomPure),
            "random_mixed" => Ok(Provenance::RandomMixed),
            "gate_choi" => Ok(Provenance::GateChoi),
            _ => Err(Error::param(format!("unknown provenance tag '{s}'"))),
        }
    }
}

/// Rank of the components drawn for `random_mixed` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    Fixed(usize),
    /// Uniform over 1..=d, drawn independently per state.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    /// Qubits per state, or per gate for `gate_choi` and `mixed_config`.
    pub n_qubits: usize,
    pub kind: PairKind,
    pub n_samples: usize,
    /// 0 keeps the natural label distribution.
    pub uniform_bins: usize,
    pub seed: u64,
    pub rank: RankPolicy,
    /// Range of the uniform perturbation strength for natural gate pairs.
    pub gate_epsilon: (f64, f64),
    /// Share of gate pairs in `mixed_config`.
    pub gate_fraction: f64,
}

impl GenerationSpec {
    pub fn new(
        n_qubits: usize,
        kind: PairKind,
        n_samples: usize,
        uniform_bins: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_qubits,
            kind,
            n_samples,
            uniform_bins,
            seed,
            rank: RankPolicy::Uniform,
            gate_epsilon: (0.01, 0.5),
            gate_fraction: 0.5,
        }
    }

    /// Qubit count of the states that are featurized.
    pub fn state_qubits(&self) -> usize {
        match self.kind {
            PairKind::GateChoi | PairKind::MixedConfig => 2 * self.n_qubits,
            _ => self.n_qubits,
        }
    }

    pub fn layout(&self) -> Result<FeatureLayout> {
        layout_for(self.state_qubits())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 1 {
            return Err(Error::param("n_qubits must be at least 1"));
        }
        quantum::check_qubits(self.state_qubits())?;
        if self.n_samples < 1 {
            return Err(Error::param("n_samples must be at least 1"));
        }
        let (lo, hi) = self.gate_epsilon;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::param(format!(
                "gate epsilon range ({lo}, {hi}) is invalid"
            )));
        }
        if !(0.0..=1.0).contains(&self.gate_fraction) {
            return Err(Error::param(format!(
                "gate fraction {} outside [0, 1]",
                self.gate_fraction
            )));
        }
        if let RankPolicy::Fixed(r) = self.rank {
            let d = 1usize << self.n_qubits;
            if r < 1 || r > d {
                return Err(Error::param(format!("rank {r} outside [1, {d}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::param(format!("unknown split tag '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub features: Vec<f64>,
    pub label: f64,
    pub bin: usize,
    pub provenance: Provenance,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub layout: FeatureLayout,
    /// Present for generated data.
    pub spec: Option<GenerationSpec>,
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(&self.layout)
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Row-major design matrix.
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn bin_counts(&self, n_bins: usize) -> Vec<usize> {
        let mut counts = vec![0; n_bins];
        for r in &self.rows {
            if r.bin < n_bins {
                counts[r.bin] += 1;
            }
        }
        counts
    }
}

/// One generated pair with its label.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub label: f64,
    pub provenance: Provenance,
}

fn draw_rank(policy: RankPolicy, n_qubits: usize, rng: &mut SeededRandomSource) -> usize {
    match policy {
        RankPolicy::Fixed(r) => r,
        RankPolicy::Uniform => 1 + rng.index(1 << n_qubits),
    }
}

/// Kind of pair drawn for one sample; resolves the `mixed_config` coin.
fn resolve_kind(spec: &GenerationSpec, rng: &mut SeededRandomSource) -> Provenance {
    match spec.kind {
        PairKind::RandomPure => Provenance::RandomPure,
        PairKind::RandomMixed => Provenance::RandomMixed,
        PairKind::GateChoi => Provenance::GateChoi,
        PairKind::MixedConfig => {
            if rng.uniform() < spec.gate_fraction {
                Provenance::GateChoi
            } else {
                Provenance::RandomPure
            }
        }
    }
}

/// Random state of the given provenance on the generation state space; gate
/// states are Choi states of Haar unitaries.
fn random_state(
    spec: &GenerationSpec,
    kind: Provenance,
    rng: &mut SeededRandomSource,
) -> Result<DensityMatrix> {
    match kind {
        Provenance::RandomPure => random_pure_state(spec.state_qubits(), rng),
        Provenance::RandomMixed => {
            let rank = draw_rank(spec.rank, spec.n_qubits, rng);
            random_mixed_state(spec.n_qubits, rank, rng)
        }
        Provenance::GateChoi => choi_state(&random_unitary(spec.n_qubits, rng)?),
    }
}

/// Draws one pair from the natural distribution of `spec.kind`.
///
/// Gate pairs are (Φ_U, Φ_V) with U Haar and V a perturbation of U whose
/// strength is uniform in `spec.gate_epsilon`.
pub fn generate_pair(spec: &GenerationSpec, rng: &mut SeededRandomSource) -> Result<GeneratedPair> {
    let kind = resolve_kind(spec, rng);
    let (rho, sigma) = match kind {
        Provenance::GateChoi => {
            let u = random_unitary(spec.n_qubits, rng)?;
            let (lo, hi) = spec.gate_epsilon;
            let eps = rng.uniform_range(lo, hi);
            let v = perturb_unitary(&u, eps, rng)?;
            (choi_state(&u)?, choi_state(&v)?)
        }
        _ => (
            random_state(spec, kind, rng)?,
            random_state(spec, kind, rng)?,
        ),
    };
    let label = trace_distance(&rho, &sigma)?;
    Ok(GeneratedPair {
        rho,
        sigma,
        label,
        provenance: kind,
    })
}

/// α ∈ [0, 1] with T(ρ₁, (1−α)ρ₁ + αρ_rand) = target, or `None` when the
/// target exceeds T(ρ₁, ρ_rand).
///
/// The distance is α·T(ρ₁, ρ_rand), so α is solved in closed form; bisection
/// is kept as a fallback in case the check fails numerically.
pub fn solve_alpha(
    rho1: &DensityMatrix,
    rho_rand: &DensityMatrix,
    target: f64,
) -> Result<Option<f64>> {
    if !(target >= 0.0) {
        return Err(Error::param(format!(
            "target distance {target} must be non-negative"
        )));
    }
    let full = trace_distance(rho1, rho_rand)?;
    if target > full + ALPHA_TOL {
        return Ok(None);
    }
    if target == 0.0 {
        return Ok(Some(0.0));
    }
    if full <= 0.0 {
        return Ok(None);
    }
    let dist = |a: f64| -> Result<f64> { trace_distance(rho1, &rho1.mix(rho_rand, a)?) };
    let alpha = (target / full).clamp(0.0, 1.0);
    if (dist(alpha)? - target).abs() <= ALPHA_TOL {
        return Ok(Some(alpha));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if dist(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Natural-distribution bin of a label.
pub fn natural_bin(label: f64, n_bins: usize) -> usize {
    ((label * n_bins as f64).floor().max(0.0) as usize).min(n_bins - 1)
}

/// Sample `id` of a binned dataset: bin `id mod B`, base and random states
/// redrawn until the random state reaches into the bin.
fn generate_binned(
    spec: &GenerationSpec,
    id: u64,
    rng: &mut SeededRandomSource,
) -> Result<GeneratedPair> {
    let bins = spec.uniform_bins;
    let bin = (id % bins as u64) as usize;
    let lo = bin as f64 / bins as f64;
    let hi = (bin + 1) as f64 / bins as f64;
    for _ in 0..RETRY_CAP {
        let kind = resolve_kind(spec, rng);
        let rho1 = random_state(spec, kind, rng)?;
        let rho_rand = random_state(spec, kind, rng)?;
        let reach = trace_distance(&rho1, &rho_rand)?;
        if reach <= lo {
            continue;
        }
        let target = rng.uniform_range(lo, hi.min(reach));
        let Some(alpha) = solve_alpha(&rho1, &rho_rand, target)? else {
            continue;
        };
        let sigma = rho1.mix(&rho_rand, alpha)?;
        let label = trace_distance(&rho1, &sigma)?;
        return Ok(GeneratedPair {
            rho: rho1,
            sigma,
            label,
            provenance: kind,
        });
    }
    Err(Error::Generation {
        bin,
        msg: format!("no random state reached [{lo:.3}, {hi:.3}) after {RETRY_CAP} attempts"),
    })
}

/// Regenerates sample `id` of a dataset exactly as [`generate_dataset`] does.
pub fn generate_sample(spec: &GenerationSpec, id: u64) -> Result<GeneratedPair> {
    let mut rng = SeededRandomSource::new(derive_seed(spec.seed, id));
    if spec.uniform_bins == 0 {
        generate_pair(spec, &mut rng)
    } else {
        generate_binned(spec, id, &mut rng)
    }
}

/// Generates `spec.n_samples` rows in parallel and shuffles them by seed.
///
/// Each sample draws from its own stream `derive_seed(seed, id)`, so the
/// result does not depend on the rayon pool size.
pub fn generate_dataset(spec: &GenerationSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let layout = spec.layout()?;
    let mut rows: Vec<LabeledRow> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|id| {
            let pair = generate_sample(spec, id)?;
            let features = extract_features(&pair.rho, &pair.sigma, &layout)?.values;
            let bin = if spec.uniform_bins == 0 {
                natural_bin(pair.label, NATURAL_STRATA)
            } else {
                (id % spec.uniform_bins as u64) as usize
            };
            Ok(LabeledRow {
                features,
                label: pair.label,
                bin,
                provenance: pair.provenance,
                split: None,
            })
        })
        .collect::<Result<_>>()?;
    SeededRandomSource::new(derive_seed(spec.seed, SHUFFLE_STREAM)).shuffle(&mut rows);
    Ok(LabeledDataset {
        layout,
        spec: Some(spec.clone()),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_endpoints_and_midpoint() {
        let mut rng = SeededRandomSource::new(9);
        let a = random_pure_state(2, &mut rng).unwrap();
        let b = random_pure_state(2, &mut rng).unwrap();
        let t = trace_distance(&a, &b).unwrap();
        assert_eq!(solve_alpha(&a, &b, 0.0).unwrap(), Some(0.0));
        assert!((solve_alpha(&a, &b, t).unwrap().unwrap() - 1.0).abs() < 1e-9);
        let half = solve_alpha(&a, &b, t / 2.0).unwrap().unwrap();
        assert!((half - 0.5).abs() < 1e-9);
        let mixed = a.mix(&b, half).unwrap();
        assert!((trace_distance(&a, &mixed).unwrap() - t / 2.0).abs() < 1e-9);
        assert_eq!(solve_alpha(&a, &b, t + 0.01).unwrap(), None);
        assert!(solve_alpha(&a, &b, -0.1).is_err());
    }

    #[test]
    fn gate_pair_with_identical_unitaries_has_zero_label() {
        let mut rng = SeededRandomSource::new(1);
        let u = random_unitary(1, &mut rng).unwrap();
        let a = choi_state(&u).unwrap();
        assert_eq!(trace_distance(&a, &a.clone()).unwrap(), 0.0);
    }

    #[test]
    fn mixed_config_has_both_tags() {
        let spec = GenerationSpec::new(1, PairKind::MixedConfig, 200, 0, 4);
        let ds = generate_dataset(&spec).unwrap();
        assert!(ds.rows.iter().any(|r| r.provenance == Provenance::GateChoi));
        assert!(ds
            .rows
            .iter()
            .any(|r| r.provenance == Provenance::RandomPure));
        assert_eq!(ds.layout.n_qubits, 2);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("gate_choi".parse::<PairKind>().unwrap(), PairKind::GateChoi);
        assert_eq!(
            "random-pure".parse::<PairKind>().unwrap(),
            PairKind::RandomPure
        );
        assert!("bogus".parse::<PairKind>().is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_dataset(&GenerationSpec::new(0, PairKind::RandomPure, 10, 0, 1)).is_err());
        assert!(generate_dataset(&GenerationSpec::new(1, PairKind::RandomPure, 0, 0, 1)).is_err());
        let mut s = GenerationSpec::new(1, PairKind::RandomMixed, 10, 0, 1);
        s.rank = RankPolicy::Fixed(3);
        assert!(generate_dataset(&s).is_err());
    }

    #[test]
    fn natural_bins() {
        assert_eq!(natural_bin(0.0, 10), 0);
        assert_eq!(natural_bin(0.55, 10), 5);
        assert_eq!(natural_bin(1.0, 10), 9);
    }
}
