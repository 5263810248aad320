use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the per-feature standard deviation.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature standardization z = (x − mean) / std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = x.first() else {
            return Err(Error::param("cannot fit a scaler on zero rows"));
        };
        let p = first.len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; p];
        for row in x {
            if row.len() != p {
                return Err(Error::param("ragged design matrix"));
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        // A column of identical values gets exactly that value as its mean.
        for (j, m) in mean.iter_mut().enumerate() {
            if x.iter().all(|r| r[j] == first[j]) {
                *m = first[j];
            }
        }
        let mut var = vec![0.0; p];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(STD_FLOOR))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_transform(&self, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        z.iter()
            .map(|r| {
                r.iter()
                    .zip(&self.mean)
                    .zip(&self.std)
                    .map(|((z, m), s)| z * s + m)
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_and_inverts() {
        let x = vec![
            vec![1.0, 5.0, 2.0],
            vec![3.0, 5.0, -1.0],
            vec![8.0, 5.0, 0.5],
        ];
        let s = StandardScaler::fit(&x).unwrap();
        let z = s.transform(&x);
        for j in [0, 2] {
            let m: f64 = z.iter().map(|r| r[j]).sum::<f64>() / 3.0;
            let v: f64 = z.iter().map(|r| r[j] * r[j]).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
        assert!(z.iter().all(|r| r[1] == 0.0));
        let back = s.inverse_transform(&z);
        for (a, b) in back.iter().flatten().zip(x.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
