use serde::{Deserialize, Serialize};

use super::tree::{Columns, DecisionTree, TreeParams};
use crate::rng::SeededRandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<DecisionTree>,
    /// Training MSE after stage 0 (the mean) through stage M.
    pub train_mse: Vec<f64>,
}

impl GradientBoosting {
    /// F₀ = mean(y); F_m = F_{m−1} + η·tree_m(residual).
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &BoostingParams) -> Self {
        let cols = Columns::new(x);
        let n = y.len();
        let init = y.iter().sum::<f64>() / n as f64;
        let mut f = vec![init; n];
        let mse = |f: &[f64]| f.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        let mut train_mse = vec![mse(&f)];
        let tree_params = TreeParams {
            max_depth: Some(params.max_depth),
            min_samples_leaf: params.min_samples_leaf,
            max_features: None,
        };
        // All features are examined, so the generator is never consulted.
        let mut rng = SeededRandomSource::new(0);
        let mut trees = Vec::with_capacity(params.n_stages);
        for _ in 0..params.n_stages {
            let resid: Vec<f64> = y.iter().zip(&f).map(|(t, p)| t - p).collect();
            let tree =
                DecisionTree::fit_rows(&cols, &resid, (0..n).collect(), &tree_params, &mut rng);
            for (fi, row) in f.iter_mut().zip(x) {
                *fi += params.learning_rate * tree.predict_row(row);
            }
            train_mse.push(mse(&f));
            trees.push(tree);
        }
        Self {
            init,
            learning_rate: params.learning_rate,
            trees,
            train_mse,
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }
}
