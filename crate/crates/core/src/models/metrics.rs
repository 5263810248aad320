use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
}

/// MSE, MAE and R² (against the mean of `y_true`).
///
/// A constant `y_true` gives R² = 1 for a perfect fit and 0 otherwise.
pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::param(format!(
            "length mismatch: {} targets, {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::param("need at least two rows to evaluate"));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let (mut ss_res, mut abs, mut ss_tot) = (0.0, 0.0, 0.0);
    for (t, p) in y_true.iter().zip(y_pred) {
        ss_res += (t - p) * (t - p);
        abs += (t - p).abs();
        ss_tot += (t - mean) * (t - mean);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Metrics {
        mse: ss_res / n,
        mae: abs / n,
        r2,
    })
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    // Columns that only carry round-off (e.g. the smallest eigenvalue of pure
    // states) count as constant.
    let floor = |m: f64| n * (1e-12 * m.abs().max(1.0)).powi(2);
    if sxx <= floor(mx) || syy <= floor(my) {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Top `k` features by |r| with the label; ties go to the lower index.
pub fn pearson_feature_ranking(ds: &LabeledDataset, k: usize) -> Result<Vec<(String, f64)>> {
    if k < 1 {
        return Err(Error::param("k must be at least 1"));
    }
    if ds.rows.len() < 3 {
        return Err(Error::param("need at least three rows to rank features"));
    }
    let y = ds.labels();
    let names = ds.feature_names();
    let mut scored: Vec<(usize, f64)> = (0..ds.layout.total_length)
        .map(|j| {
            let col: Vec<f64> = ds.rows.iter().map(|r| r.features[j]).collect();
            (j, pearson(&col, &y))
        })
        .collect();
    scored.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(j, r)| (names[j].clone(), r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let y = [0.1, 0.4, 0.9];
        assert_eq!(
            evaluate(&y, &y).unwrap(),
            Metrics {
                mse: 0.0,
                mae: 0.0,
                r2: 1.0
            }
        );
        let m = [y.iter().sum::<f64>() / 3.0; 3];
        assert!(evaluate(&y, &m).unwrap().r2.abs() < 1e-12);
        let e = evaluate(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!((e.mse, e.mae, e.r2), (0.25, 0.5, 0.0));
        assert!(evaluate(&[0.0], &[0.0]).is_err());
        assert!(evaluate(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn pearson_signs() {
        let x = [1.0, 2.0, 3.0, 5.0];
        assert!((pearson(&x, &x) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&neg, &x) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[2.0; 4], &x), 0.0);
    }
}
