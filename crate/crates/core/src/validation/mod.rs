//! Monte-Carlo checks of the measurement bound and the gate-error bound,
//! with true and model-predicted distances, plus the gate/noise sweep.

mod noise;
mod povm;
mod prop;

pub use noise::{
    gate_error_rate, gate_error_rate_with, gate_noise_sensitivity, pauli_rotation,
    GateSensitivityReport, NoiseKind, NoiseSpec, DEFAULT_NOISE_P, DEFAULT_NOISE_THETA,
};
pub use povm::{lambda_max, measurement_probability, povm_element_with_scale, sample_povm_element};
pub use prop::{validate_prop1, validate_prop2, Prop1Config, Prop2Config, Prop2Noise};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, layout_for};
use crate::models::RegressionModel;
use crate::quantum::{trace_distance, DensityMatrix};

/// Source of distances between state pairs.
#[derive(Debug, Clone, Copy)]
pub enum DistanceOracle<'a> {
    /// The trace-distance proxy computed exactly.
    True,
    Model(&'a RegressionModel),
}

impl DistanceOracle<'_> {
    /// Fails unless the oracle can score pairs of `n_qubits`-qubit states.
    pub fn check(&self, n_qubits: usize) -> Result<()> {
        if let DistanceOracle::Model(m) = self {
            let layout = layout_for(n_qubits)?;
            if m.n_features != layout.total_length {
                return Err(Error::compat(format!(
                    "model expects {} features, {n_qubits}-qubit states give {}",
                    m.n_features, layout.total_length
                )));
            }
            m.check_layout(&layout.hash())?;
        }
        Ok(())
    }

    pub fn distances(&self, pairs: &[(DensityMatrix, DensityMatrix)]) -> Result<Vec<f64>> {
        match self {
            DistanceOracle::True => pairs
                .par_iter()
                .map(|(a, b)| trace_distance(a, b))
                .collect(),
            DistanceOracle::Model(m) => {
                let Some(first) = pairs.first() else {
                    return Ok(Vec::new());
                };
                let n = first.0.n_qubits();
                self.check(n)?;
                let layout = layout_for(n)?;
                let x = pairs
                    .par_iter()
                    .map(|(a, b)| extract_features(a, b, &layout).map(|f| f.values))
                    .collect::<Result<Vec<_>>>()?;
                m.predict(&x)
            }
        }
    }
}

/// One trial. Ratios are `gap / bound` and exist only for a positive bound.
/// A violation is a ratio above 1, or a positive gap against a
/// non-positive bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Perturbation strength (Prop. 1) or largest rotation angle (Prop. 2).
    pub epsilon: f64,
    /// Measurement gap Δ or estimated error rate e.
    pub gap: f64,
    /// λ_max of the sampled POVM element (Prop. 1 only).
    pub lambda_max: Option<f64>,
    pub distances_true: Vec<f64>,
    pub distances_pred: Vec<f64>,
    pub bound_true: f64,
    pub bound_pred: f64,
    pub ratio_true: Option<f64>,
    pub ratio_pred: Option<f64>,
    pub slack_true: f64,
    pub slack_pred: f64,
    pub violation_true: bool,
    pub violation_pred: bool,
}

fn ratio(gap: f64, bound: f64) -> Option<f64> {
    (bound > 0.0).then(|| gap / bound)
}

fn violated(gap: f64, bound: f64) -> bool {
    match ratio(gap, bound) {
        Some(r) => r > 1.0,
        None => gap > bound,
    }
}

impl TrialRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        trial: usize,
        epsilon: f64,
        gap: f64,
        lambda_max: Option<f64>,
        distances_true: Vec<f64>,
        distances_pred: Vec<f64>,
        bound_true: f64,
        bound_pred: f64,
    ) -> Self {
        Self {
            trial,
            epsilon,
            gap,
            lambda_max,
            distances_true,
            distances_pred,
            bound_true,
            bound_pred,
            ratio_true: ratio(gap, bound_true),
            ratio_pred: ratio(gap, bound_pred),
            slack_true: bound_true - gap,
            slack_pred: bound_pred - gap,
            violation_true: violated(gap, bound_true),
            violation_pred: violated(gap, bound_pred),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub proposition: String,
    pub trials: usize,
    pub violations_true: usize,
    pub violations_pred: usize,
    /// `None` when no trial had a positive bound.
    pub max_ratio_true: Option<f64>,
    pub max_ratio_pred: Option<f64>,
    pub min_slack_true: Option<f64>,
    pub min_slack_pred: Option<f64>,
    /// Error of predicted against true distances over every scored pair.
    pub model_mse: f64,
    pub model_mae: f64,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<TrialRecord>,
}

fn max_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

impl ValidationReport {
    pub fn from_records(
        proposition: &str,
        config: serde_json::Value,
        records: Vec<TrialRecord>,
    ) -> Self {
        let (mut se, mut ae, mut k) = (0.0, 0.0, 0usize);
        for r in &records {
            for (t, p) in r.distances_true.iter().zip(&r.distances_pred) {
                se += (p - t).powi(2);
                ae += (p - t).abs();
                k += 1;
            }
        }
        let k = k.max(1) as f64;
        Self {
            proposition: proposition.to_string(),
            trials: records.len(),
            violations_true: records.iter().filter(|r| r.violation_true).count(),
            violations_pred: records.iter().filter(|r| r.violation_pred).count(),
            max_ratio_true: max_of(records.iter().filter_map(|r| r.ratio_true)),
            max_ratio_pred: max_of(records.iter().filter_map(|r| r.ratio_pred)),
            min_slack_true: max_of(records.iter().map(|r| -r.slack_true)).map(|v| -v),
            min_slack_pred: max_of(records.iter().map(|r| -r.slack_pred)).map(|v| -v),
            model_mse: se / k,
            model_mae: ae / k,
            config,
            records,
        }
    }

    /// Counts of defined ratios in `n_bins` equal bins over `[0, hi)`, plus a
    /// final overflow bin for ratios ≥ `hi`. Rows are `(lo, hi, true, pred)`.
    pub fn ratio_histogram(&self, n_bins: usize, hi: f64) -> Vec<(f64, f64, usize, usize)> {
        let n_bins = n_bins.max(1);
        let width = hi / n_bins as f64;
        let mut rows: Vec<(f64, f64, usize, usize)> = (0..n_bins)
            .map(|b| (b as f64 * width, (b + 1) as f64 * width, 0, 0))
            .collect();
        rows.push((hi, f64::INFINITY, 0, 0));
        let slot = |r: f64| {
            if r >= hi {
                n_bins
            } else {
                ((r / width) as usize).min(n_bins - 1)
            }
        };
        for rec in &self.records {
            if let Some(r) = rec.ratio_true {
                rows[slot(r)].2 += 1;
            }
            if let Some(r) = rec.ratio_pred {
                rows[slot(r)].3 += 1;
            }
        }
        rows
    }
}
