use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Columns, DecisionTree, TreeParams};
use crate::rng::{derive_seed, SeededRandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Features per split; `None` means ⌈p/3⌉.
    pub features_per_split: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            features_per_split: None,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Trees are trained in parallel; tree `t` draws only from
    /// `derive_seed(seed, t)`, so the pool size does not matter.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Self {
        let cols = Columns::new(x);
        let p = cols.n_features();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(params.features_per_split.unwrap_or(p.div_ceil(3)).max(1)),
        };
        let n = y.len();
        let trees = (0..params.n_trees as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = SeededRandomSource::new(derive_seed(params.seed, t));
                let rows = if params.bootstrap {
                    (0..n).map(|_| rng.index(n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit_rows(&cols, y, rows, &tree_params, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = SeededRandomSource::new(8);
        let x: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..4).map(|_| rng.gaussian()).collect())
            .collect();
        let y = x.iter().map(|r| r[0] * r[0] + r[1]).collect();
        (x, y)
    }

    #[test]
    fn single_full_tree_equals_decision_tree() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(4),
            ..Default::default()
        };
        let f = RandomForest::fit(&x, &y, &params);
        let t = DecisionTree::fit(&x, &y, &TreeParams::default(), 0);
        for r in &x {
            assert_eq!(f.predict_row(r), t.predict_row(r));
        }
    }

    #[test]
    fn deterministic_across_pools() {
        let (x, y) = data();
        let params = ForestParams {
            n_trees: 16,
            seed: 5,
            ..Default::default()
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| RandomForest::fit(&x, &y, &params));
        let b = four.install(|| RandomForest::fit(&x, &y, &params));
        assert_eq!(a, b);
    }
}
