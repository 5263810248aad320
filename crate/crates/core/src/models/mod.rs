//! Regression models behind one fit / predict / save contract.

mod boosting;
mod forest;
mod linear;
mod metrics;
mod mlp;
mod scaler;
mod tree;

pub use boosting::{BoostingParams, GradientBoosting};
pub use forest::{ForestParams, RandomForest};
pub use linear::{fit_least_squares, fit_penalized, fit_penalized_cv, LinearModel, PenalizedFit};
pub use metrics::{evaluate, pearson, pearson_feature_ranking, Metrics};
pub use mlp::{to_matrix, Mlp, MlpParams, TrainHistory};
pub use scaler::{StandardScaler, STD_FLOOR};
pub use tree::{DecisionTree, Node, TreeParams};

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Ridge,
    Lasso,
    ElasticNet,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Linear,
        ModelKind::Ridge,
        ModelKind::Lasso,
        ModelKind::ElasticNet,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
        ModelKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
            ModelKind::ElasticNet => "elastic_net",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Linear family and MLP train on standardized inputs.
    pub fn uses_scaler(self) -> bool {
        !matches!(
            self,
            ModelKind::DecisionTree | ModelKind::RandomForest | ModelKind::GradientBoosting
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
                Error::param(format!(
                    "unknown model kind '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Optional overrides; anything unset takes the kind's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// L1 weight for lasso / elastic net; lasso cross-validates it when unset.
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub n_trees: Option<usize>,
    pub bootstrap: Option<bool>,
    pub features_per_split: Option<usize>,
    pub n_stages: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub dropout: Option<f64>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub patience: Option<usize>,
    pub batchnorm: Option<bool>,
    pub seed: Option<u64>,
    /// Clip predictions to [0, 1].
    pub clip: Option<bool>,
}

/// Default ridge weight.
pub const DEFAULT_RIDGE_L2: f64 = 1.0;
/// Default elastic-net weights.
pub const DEFAULT_ENET: (f64, f64) = (1e-4, 1e-4);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Fitted {
    Linear {
        model: LinearModel,
        l1: f64,
        l2: f64,
        cv_path: Option<Vec<(f64, f64)>>,
    },
    Tree {
        tree: DecisionTree,
    },
    Forest {
        forest: RandomForest,
    },
    Boosting {
        boosting: GradientBoosting,
    },
    Mlp {
        mlp: Mlp,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub hyperparams: Hyperparams,
    pub n_features: usize,
    pub layout_hash: Option<String>,
    pub scaler: Option<StandardScaler>,
    pub clip: bool,
    pub fitted: Fitted,
}

fn check_design(x: &[Vec<f64>], y: &[f64], min_rows: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_rows {
        return Err(Error::param(format!(
            "need at least {min_rows} rows, got {}",
            x.len()
        )));
    }
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::param("ragged design matrix"));
    }
    Ok(p)
}

impl RegressionModel {
    /// Fits `kind` on (x, y). `val` is only used by the MLP (plateau schedule
    /// and weight selection).
    pub fn fit(
        kind: ModelKind,
        x: &[Vec<f64>],
        y: &[f64],
        val: Option<(&[Vec<f64>], &[f64])>,
        hp: &Hyperparams,
    ) -> Result<Self> {
        let min_rows = if kind == ModelKind::DecisionTree {
            1
        } else {
            2
        };
        let p = check_design(x, y, min_rows)?;
        let scaler = if kind.uses_scaler() {
            Some(StandardScaler::fit(x)?)
        } else {
            None
        };
        let xs_owned;
        let xs: &[Vec<f64>] = match &scaler {
            Some(s) => {
                xs_owned = s.transform(x);
                &xs_owned
            }
            None => x,
        };
        let seed = hp.seed.unwrap_or(0);
        let fitted = match kind {
            ModelKind::Linear | ModelKind::Ridge | ModelKind::Lasso | ModelKind::ElasticNet => {
                let s = scaler.as_ref().expect("linear models are scaled");
                // Columns with no variance beyond round-off get no coefficient.
                let active: Vec<bool> = s.std.iter().map(|&d| d > STD_FLOOR).collect();
                let fit = match kind {
                    ModelKind::Linear => PenalizedFit {
                        model: fit_least_squares(xs, y, 0.0, &active)?,
                        l1: 0.0,
                        l2: 0.0,
                        sweeps: 0,
                        cv_path: None,
                    },
                    ModelKind::Ridge => {
                        let l2 = hp.l2.unwrap_or(DEFAULT_RIDGE_L2);
                        PenalizedFit {
                            model: fit_least_squares(xs, y, l2, &active)?,
                            l1: 0.0,
                            l2,
                            sweeps: 0,
                            cv_path: None,
                        }
                    }
                    ModelKind::Lasso => match hp.l1 {
                        Some(l1) => fit_penalized(xs, y, l1, 0.0, &active)?,
                        None => fit_penalized_cv(xs, y, 0.0, &active)?,
                    },
                    _ => fit_penalized(
                        xs,
                        y,
                        hp.l1.unwrap_or(DEFAULT_ENET.0),
                        hp.l2.unwrap_or(DEFAULT_ENET.1),
                        &active,
                    )?,
                };
                Fitted::Linear {
                    model: fit.model,
                    l1: fit.l1,
                    l2: fit.l2,
                    cv_path: fit.cv_path,
                }
            }
            ModelKind::DecisionTree => {
                let params = TreeParams {
                    max_depth: hp.max_depth,
                    min_samples_leaf: hp.min_samples_leaf.unwrap_or(1),
                    max_features: hp.features_per_split,
                };
                Fitted::Tree {
                    tree: DecisionTree::fit(xs, y, &params, seed),
                }
            }
            ModelKind::RandomForest => {
                let d = ForestParams::default();
                let params = ForestParams {
                    n_trees: hp.n_trees.unwrap_or(d.n_trees),
                    bootstrap: hp.bootstrap.unwrap_or(d.bootstrap),
                    features_per_split: hp.features_per_split,
                    max_depth: hp.max_depth,
                    min_samples_leaf: hp.min_samples_leaf.unwrap_or(d.min_samples_leaf),
                    seed,
                };
                Fitted::Forest {
                    forest: RandomForest::fit(xs, y, &params),
                }
            }
            ModelKind::GradientBoosting => {
                let d = BoostingParams::default();
                let params = BoostingParams {
                    n_stages: hp.n_stages.unwrap_or(d.n_stages),
                    learning_rate: hp.learning_rate.unwrap_or(d.learning_rate),
                    max_depth: hp.max_depth.unwrap_or(d.max_depth),
                    min_samples_leaf: hp.min_samples_leaf.unwrap_or(d.min_samples_leaf),
                };
                Fitted::Boosting {
                    boosting: GradientBoosting::fit(xs, y, &params),
                }
            }
            ModelKind::Mlp => {
                let d = MlpParams::default();
                let params = MlpParams {
                    hidden: hp.hidden.clone().unwrap_or(d.hidden),
                    dropout: hp.dropout.unwrap_or(d.dropout),
                    lr: hp.lr.unwrap_or(d.lr),
                    batch: hp.batch.unwrap_or(d.batch),
                    epochs: hp.epochs.unwrap_or(d.epochs),
                    patience: hp.patience.unwrap_or(d.patience),
                    batchnorm: hp.batchnorm.unwrap_or(d.batchnorm),
                    seed,
                    ..d
                };
                let val_scaled =
                    val.map(|(xv, yv)| (scaler.as_ref().expect("mlp is scaled").transform(xv), yv));
                let val_ref = val_scaled.as_ref().map(|(xv, yv)| (xv.as_slice(), *yv));
                Fitted::Mlp {
                    mlp: Mlp::fit(xs, y, val_ref, &params)?,
                }
            }
        };
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            hyperparams: hp.clone(),
            n_features: p,
            layout_hash: None,
            scaler,
            clip: hp.clip.unwrap_or(false),
            fitted,
        })
    }

    /// Fits on a dataset and records its layout hash.
    pub fn fit_dataset(
        kind: ModelKind,
        train: &LabeledDataset,
        val: Option<&LabeledDataset>,
        hp: &Hyperparams,
    ) -> Result<Self> {
        if let Some(v) = val {
            if v.layout != train.layout {
                return Err(Error::compat("train and validation layouts differ"));
            }
        }
        let x = train.features();
        let y = train.labels();
        let vx = val.map(|v| (v.features(), v.labels()));
        let vref = vx.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()));
        let mut model = Self::fit(kind, &x, &y, vref, hp)?;
        model.layout_hash = Some(train.layout.hash());
        Ok(model)
    }

    /// Selected λ₁ for lasso and elastic net.
    pub fn selected_l1(&self) -> Option<f64> {
        match (&self.fitted, self.kind) {
            (Fitted::Linear { l1, .. }, ModelKind::Lasso | ModelKind::ElasticNet) => Some(*l1),
            _ => None,
        }
    }

    fn predict_unchecked(&self, x: &[Vec<f64>]) -> Vec<f64> {
        let scaled;
        let xs: &[Vec<f64>] = match &self.scaler {
            Some(s) => {
                scaled = s.transform(x);
                &scaled
            }
            None => x,
        };
        let mut out: Vec<f64> = match &self.fitted {
            Fitted::Linear { model, .. } => xs.iter().map(|r| model.predict_row(r)).collect(),
            Fitted::Tree { tree } => xs.iter().map(|r| tree.predict_row(r)).collect(),
            Fitted::Forest { forest } => xs.par_iter().map(|r| forest.predict_row(r)).collect(),
            Fitted::Boosting { boosting } => xs.iter().map(|r| boosting.predict_row(r)).collect(),
            Fitted::Mlp { mlp } => mlp.predict(&mlp::to_matrix(xs)),
        };
        if self.clip {
            out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        }
        out
    }

    /// Predictions for raw (unscaled) feature rows.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        if let Some(r) = x.iter().find(|r| r.len() != self.n_features) {
            return Err(Error::compat(format!(
                "model expects {} features, got {}",
                self.n_features,
                r.len()
            )));
        }
        let out = self.predict_unchecked(x);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch: 0,
                msg: "model produced a non-finite prediction".into(),
            });
        }
        Ok(out)
    }

    pub fn check_layout(&self, layout_hash: &str) -> Result<()> {
        match &self.layout_hash {
            Some(h) if h != layout_hash => Err(Error::compat(format!(
                "model was trained on layout {h}, input has layout {layout_hash}"
            ))),
            _ => Ok(()),
        }
    }

    /// Predictions for a dataset, refusing a different feature layout.
    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Result<Vec<f64>> {
        self.check_layout(&ds.layout.hash())?;
        self.predict(&ds.features())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = BufReader::new(File::open(path)?);
        let value: serde_json::Value = serde_json::from_reader(text)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::compat(format!(
                    "model format v{v}, expected v{MODEL_FORMAT_VERSION}"
                )));
            }
            None => return Err(Error::parse(None, "model file has no format_version")),
        }
        let model: Self = serde_json::from_value(value)?;
        if let Some(s) = &model.scaler {
            if s.n_features() != model.n_features {
                return Err(Error::compat("scaler width does not match the model"));
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRandomSource;

    fn data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = SeededRandomSource::new(31);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.uniform()).collect())
            .collect();
        let y = x.iter().map(|r| 0.5 * r[0] + 0.2 * r[1] * r[2]).collect();
        (x, y)
    }

    #[test]
    fn every_kind_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (x, y) = data(80);
        let hp = Hyperparams {
            n_trees: Some(5),
            epochs: Some(3),
            batch: Some(16),
            hidden: Some(vec![8]),
            ..Default::default()
        };
        for kind in ModelKind::ALL {
            let m = RegressionModel::fit(kind, &x, &y, None, &hp).unwrap();
            let before = m.predict(&x).unwrap();
            assert!(before.iter().all(|v| v.is_finite()));
            let p = dir.path().join(format!("{kind}.json"));
            m.save(&p).unwrap();
            let back = RegressionModel::load(&p).unwrap();
            assert_eq!(back.predict(&x).unwrap(), before, "{kind}");
        }
    }

    #[test]
    fn wrong_width_is_incompatible() {
        let (x, y) = data(20);
        let m =
            RegressionModel::fit(ModelKind::Linear, &x, &y, None, &Hyperparams::default()).unwrap();
        assert!(matches!(
            m.predict(&[vec![1.0, 2.0]]),
            Err(Error::Compatibility(_))
        ));
    }

    #[test]
    fn corrupted_and_future_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, "{\"format_version\": 1, \"kind\": ").unwrap();
        assert!(matches!(
            RegressionModel::load(&p),
            Err(Error::Parse { .. })
        ));
        std::fs::write(&p, "{\"format_version\": 99}").unwrap();
        assert!(matches!(
            RegressionModel::load(&p),
            Err(Error::Compatibility(_))
        ));
    }

    #[test]
    fn trees_ignore_standardization() {
        let (x, y) = data(60);
        let s = StandardScaler::fit(&x).unwrap();
        let xs = s.transform(&x);
        let hp = Hyperparams {
            n_trees: Some(10),
            seed: Some(2),
            ..Default::default()
        };
        for kind in [
            ModelKind::DecisionTree,
            ModelKind::RandomForest,
            ModelKind::GradientBoosting,
        ] {
            let a = RegressionModel::fit(kind, &x, &y, None, &hp)
                .unwrap()
                .predict(&x)
                .unwrap();
            let b = RegressionModel::fit(kind, &xs, &y, None, &hp)
                .unwrap()
                .predict(&xs)
                .unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn kind_names() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("randon_forest".parse::<ModelKind>().is_err());
    }
}
