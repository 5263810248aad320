//! Least squares, ridge, lasso and elastic net on an unpenalized intercept.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues of XᵀX below this fraction of the largest are treated as zero.
const RCOND: f64 = 1e-10;
pub const CD_TOL: f64 = 1e-7;
pub const CD_MAX_SWEEPS: usize = 10_000;
pub const CV_FOLDS: usize = 5;
pub const CV_GRID: usize = 50;
/// Smallest grid λ as a fraction of the smallest λ that zeroes every slope.
pub const CV_GRID_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Sufficient statistics of the centered problem.
struct Centered {
    /// XcᵀXc / n
    gram: DMatrix<f64>,
    /// Xcᵀyc / n
    xty: DVector<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

impl Centered {
    fn new(x: &[Vec<f64>], y: &[f64], rows: &[usize], active: &[bool]) -> Self {
        let p = active.len();
        let n = rows.len() as f64;
        let mut x_mean = vec![0.0; p];
        let mut y_mean = 0.0;
        for &i in rows {
            for (m, v) in x_mean.iter_mut().zip(&x[i]) {
                *m += v;
            }
            y_mean += y[i];
        }
        x_mean.iter_mut().for_each(|m| *m /= n);
        y_mean /= n;
        let xc = DMatrix::from_fn(rows.len(), p, |r, j| {
            if active[j] {
                x[rows[r]][j] - x_mean[j]
            } else {
                0.0
            }
        });
        let yc = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i] - y_mean));
        let xt = xc.transpose();
        Self {
            gram: (&xt * &xc) / n,
            xty: (&xt * &yc) / n,
            x_mean,
            y_mean,
        }
    }

    fn finish(&self, beta: DVector<f64>) -> LinearModel {
        let intercept = self.y_mean
            - beta
                .iter()
                .zip(&self.x_mean)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        LinearModel {
            intercept,
            coef: beta.iter().copied().collect(),
        }
    }

    /// Largest λ₁ for which the lasso solution is not all zero.
    fn lambda_max(&self) -> f64 {
        self.xty.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

fn check_inputs(x: &[Vec<f64>], y: &[f64], active: &[bool]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::param("need at least two rows"));
    }
    if x.iter().any(|r| r.len() != active.len()) {
        return Err(Error::param("ragged design matrix"));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Singular("design contains non-finite values".into()));
    }
    Ok(())
}

/// Minimum-norm solution of (XcᵀXc + λ₂I)β = Xcᵀyc. Columns with
/// `active[j] = false` get a zero coefficient.
///
/// With λ₂ = 0 directions of XᵀX below `RCOND` relative are dropped (the
/// pseudo-inverse); only a design of rank zero is reported as singular.
pub fn fit_least_squares(
    x: &[Vec<f64>],
    y: &[f64],
    l2: f64,
    active: &[bool],
) -> Result<LinearModel> {
    check_inputs(x, y, active)?;
    if !(l2 >= 0.0) {
        return Err(Error::param(format!("L2 weight {l2} must be non-negative")));
    }
    let rows: Vec<usize> = (0..x.len()).collect();
    let c = Centered::new(x, y, &rows, active);
    let n = x.len() as f64;
    let eig = SymmetricEigen::new(c.gram.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    if l2 == 0.0 && !(top > 0.0) {
        return Err(Error::Singular(
            "design has rank zero after centering".into(),
        ));
    }
    let proj = eig.eigenvectors.transpose() * &c.xty;
    let mut beta = DVector::zeros(active.len());
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        // The gram is scaled by 1/n, so the ridge shift is too.
        let denom = lam.max(0.0) + l2 / n;
        if (l2 == 0.0 && lam <= RCOND * top) || denom <= 0.0 {
            continue;
        }
        beta += eig.eigenvectors.column(k) * (proj[k] / denom);
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Singular(
            "least-squares solution is not finite".into(),
        ));
    }
    Ok(c.finish(beta))
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on (1/2n)‖yc − Xcβ‖² + λ₁‖β‖₁ + (λ₂/2)‖β‖².
/// Returns the number of sweeps used.
fn coordinate_descent(
    c: &Centered,
    l1: f64,
    l2: f64,
    active: &[bool],
    beta: &mut DVector<f64>,
) -> usize {
    let p = active.len();
    // q = Gβ, maintained incrementally.
    let mut q = &c.gram * &*beta;
    for sweep in 1..=CD_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let gjj = c.gram[(j, j)];
            if !active[j] || gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = c.xty[j] - (q[j] - gjj * old);
            let new = soft_threshold(rho, l1) / (gjj + l2);
            if new != old {
                let delta = new - old;
                q.axpy(delta, &c.gram.column(j), 1.0);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < CD_TOL {
            return sweep;
        }
    }
    CD_MAX_SWEEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedFit {
    pub model: LinearModel,
    pub l1: f64,
    pub l2: f64,
    pub sweeps: usize,
    /// Mean CV MSE per grid point when λ₁ was cross-validated.
    pub cv_path: Option<Vec<(f64, f64)>>,
}

/// Lasso (λ₂ = 0) or elastic net with fixed weights.
pub fn fit_penalized(
    x: &[Vec<f64>],
    y: &[f64],
    l1: f64,
    l2: f64,
    active: &[bool],
) -> Result<PenalizedFit> {
    check_inputs(x, y, active)?;
    if !(l1 >= 0.0 && l2 >= 0.0) {
        return Err(Error::param("penalty weights must be non-negative"));
    }
    let rows: Vec<usize> = (0..x.len()).collect();
    let c = Centered::new(x, y, &rows, active);
    let mut beta = DVector::zeros(active.len());
    let sweeps = coordinate_descent(&c, l1, l2, active, &mut beta);
    Ok(PenalizedFit {
        model: c.finish(beta),
        l1,
        l2,
        sweeps,
        cv_path: None,
    })
}

/// Log-spaced grid from `hi` down to `hi·CV_GRID_RATIO`.
fn lambda_grid(hi: f64) -> Vec<f64> {
    (0..CV_GRID)
        .map(|k| hi * CV_GRID_RATIO.powf(k as f64 / (CV_GRID - 1) as f64))
        .collect()
}

/// Selects λ₁ by `CV_FOLDS`-fold cross-validation (contiguous folds, warm
/// started along the grid) and refits on all rows.
pub fn fit_penalized_cv(
    x: &[Vec<f64>],
    y: &[f64],
    l2: f64,
    active: &[bool],
) -> Result<PenalizedFit> {
    check_inputs(x, y, active)?;
    let n = x.len();
    if n < CV_FOLDS {
        return Err(Error::param(format!(
            "cross-validation needs at least {CV_FOLDS} rows"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let full = Centered::new(x, y, &all, active);
    let hi = full.lambda_max();
    if hi <= 0.0 {
        return fit_penalized(x, y, 0.0, l2, active);
    }
    let grid = lambda_grid(hi);
    let mut cv_sse = vec![0.0; grid.len()];
    for f in 0..CV_FOLDS {
        let (a, b) = (f * n / CV_FOLDS, (f + 1) * n / CV_FOLDS);
        let train: Vec<usize> = all.iter().copied().filter(|&i| i < a || i >= b).collect();
        let c = Centered::new(x, y, &train, active);
        let mut beta = DVector::zeros(active.len());
        for (g, &lam) in grid.iter().enumerate() {
            coordinate_descent(&c, lam, l2, active, &mut beta);
            let m = c.finish(beta.clone());
            cv_sse[g] += (a..b)
                .map(|i| (y[i] - m.predict_row(&x[i])).powi(2))
                .sum::<f64>();
        }
    }
    let cv_mse: Vec<f64> = cv_sse.iter().map(|s| s / n as f64).collect();
    // First minimum: ties favour the larger penalty.
    let best = (0..grid.len()).fold(0, |b, g| if cv_mse[g] < cv_mse[b] { g } else { b });
    let mut beta = DVector::zeros(active.len());
    let mut sweeps = 0;
    for &lam in &grid[..=best] {
        sweeps += coordinate_descent(&full, lam, l2, active, &mut beta);
    }
    Ok(PenalizedFit {
        model: full.finish(beta),
        l1: grid[best],
        l2,
        sweeps,
        cv_path: Some(grid.into_iter().zip(cv_mse).collect()),
    })
}
