//! Fully connected regressor: (Dense → ReLU → BatchNorm → Dropout) per hidden
//! layer, then a linear output unit. Trained with Adam on MSE.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRandomSource;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// Epochs without a validation improvement of `min_delta` before the
    /// learning rate is multiplied by `plateau_factor`.
    pub patience: usize,
    pub plateau_factor: f64,
    pub min_delta: f64,
    pub batchnorm: bool,
    /// Share of the training rows held out when no validation set is given.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64],
            dropout: 0.2,
            lr: 1e-3,
            batch: 64,
            epochs: 200,
            patience: 10,
            plateau_factor: 0.5,
            min_delta: 1e-6,
            batchnorm: true,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub lr: Vec<f64>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Input width, hidden widths, then 1.
    pub sizes: Vec<usize>,
    pub batchnorm: bool,
    pub dropout: f64,
    /// Per hidden layer: W (in×out), b (1×out) and, with batch norm, γ and β
    /// (1×out); then the output W and b.
    pub params: Vec<DMatrix<f64>>,
    /// Running mean and variance per hidden layer (empty without batch norm).
    pub running: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    pub history: TrainHistory,
}

struct LayerCache {
    input: DMatrix<f64>,
    pre: DMatrix<f64>,
    xhat: DMatrix<f64>,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
    mask: Option<DMatrix<f64>>,
}

struct Cache {
    layers: Vec<LayerCache>,
    last: DMatrix<f64>,
    out: DMatrix<f64>,
}

fn col_sums(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.sum()).collect()
}

fn add_row(m: &mut DMatrix<f64>, row: &DMatrix<f64>) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let b = row[(0, j)];
        col.iter_mut().for_each(|v| *v += b);
    }
}

fn row_matrix(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v)
}

/// Rows are samples.
pub fn to_matrix(x: &[Vec<f64>]) -> DMatrix<f64> {
    let p = x.first().map_or(0, Vec::len);
    DMatrix::from_fn(x.len(), p, |i, j| x[i][j])
}

impl Mlp {
    fn per_layer(&self) -> usize {
        if self.batchnorm {
            4
        } else {
            2
        }
    }

    fn n_hidden(&self) -> usize {
        self.sizes.len() - 2
    }

    /// He-initialized network.
    pub fn new(n_inputs: usize, params: &MlpParams, rng: &mut SeededRandomSource) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend(&params.hidden);
        sizes.push(1);
        let mut p = Vec::new();
        let mut running = Vec::new();
        let n_layers = sizes.len() - 1;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, out) = (w[0], w[1]);
            let scale = (2.0 / fan_in.max(1) as f64).sqrt();
            p.push(DMatrix::from_fn(fan_in, out, |_, _| rng.gaussian() * scale));
            p.push(DMatrix::zeros(1, out));
            if params.batchnorm && l + 1 < n_layers {
                p.push(DMatrix::from_element(1, out, 1.0));
                p.push(DMatrix::zeros(1, out));
                running.push((DMatrix::zeros(1, out), DMatrix::from_element(1, out, 1.0)));
            }
        }
        Self {
            sizes,
            batchnorm: params.batchnorm,
            dropout: params.dropout,
            params: p,
            running,
            history: TrainHistory::default(),
        }
    }

    fn forward(
        &self,
        x: &DMatrix<f64>,
        bn_train: bool,
        mut dropout_rng: Option<&mut SeededRandomSource>,
    ) -> Cache {
        let k = self.per_layer();
        let mut a = x.clone();
        let mut layers = Vec::with_capacity(self.n_hidden());
        for l in 0..self.n_hidden() {
            let w = &self.params[l * k];
            let mut pre = &a * w;
            add_row(&mut pre, &self.params[l * k + 1]);
            let mut h = pre.map(|v| v.max(0.0));
            let (mut xhat, mut inv_std, mut batch_mean, mut batch_var) =
                (DMatrix::zeros(0, 0), vec![], vec![], vec![]);
            if self.batchnorm {
                let (gamma, beta) = (&self.params[l * k + 2], &self.params[l * k + 3]);
                let rows = h.nrows() as f64;
                let (mean, var): (Vec<f64>, Vec<f64>) = if bn_train {
                    h.column_iter()
                        .map(|c| {
                            let m = c.sum() / rows;
                            (m, c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / rows)
                        })
                        .unzip()
                } else {
                    let (rm, rv) = &self.running[l];
                    (rm.iter().copied().collect(), rv.iter().copied().collect())
                };
                inv_std = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
                xhat = h.clone();
                for (j, mut col) in xhat.column_iter_mut().enumerate() {
                    col.iter_mut()
                        .for_each(|v| *v = (*v - mean[j]) * inv_std[j]);
                }
                h = xhat.clone();
                for (j, mut col) in h.column_iter_mut().enumerate() {
                    let (g, b) = (gamma[(0, j)], beta[(0, j)]);
                    col.iter_mut().for_each(|v| *v = g * *v + b);
                }
                batch_mean = mean;
                batch_var = var;
            }
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let keep = 1.0 - self.dropout;
                    let m = DMatrix::from_fn(h.nrows(), h.ncols(), |_, _| {
                        if rng.uniform() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    h.component_mul_assign(&m);
                    Some(m)
                }
                _ => None,
            };
            layers.push(LayerCache {
                input: a,
                pre,
                xhat,
                inv_std,
                batch_mean,
                batch_var,
                mask,
            });
            a = h;
        }
        let o = self.n_hidden() * k;
        let mut out = &a * &self.params[o];
        add_row(&mut out, &self.params[o + 1]);
        Cache {
            layers,
            last: a,
            out,
        }
    }

    /// Gradients of the mean squared error for a forward pass.
    fn backward(&self, cache: &Cache, y: &[f64], bn_train: bool) -> Vec<DMatrix<f64>> {
        let k = self.per_layer();
        let b = y.len() as f64;
        let mut grads: Vec<DMatrix<f64>> = self
            .params
            .iter()
            .map(|p| DMatrix::zeros(p.nrows(), p.ncols()))
            .collect();
        let dout = DMatrix::from_fn(y.len(), 1, |i, _| 2.0 * (cache.out[(i, 0)] - y[i]) / b);
        let o = self.n_hidden() * k;
        grads[o] = cache.last.transpose() * &dout;
        grads[o + 1] = row_matrix(&col_sums(&dout));
        let mut da = &dout * self.params[o].transpose();
        for l in (0..self.n_hidden()).rev() {
            let c = &cache.layers[l];
            if let Some(m) = &c.mask {
                da.component_mul_assign(m);
            }
            let mut dh = da;
            if self.batchnorm {
                let gamma = &self.params[l * k + 2];
                grads[l * k + 2] = row_matrix(&col_sums(&dh.component_mul(&c.xhat)));
                grads[l * k + 3] = row_matrix(&col_sums(&dh));
                let mut dxhat = dh;
                for (j, mut col) in dxhat.column_iter_mut().enumerate() {
                    let g = gamma[(0, j)];
                    col.iter_mut().for_each(|v| *v *= g);
                }
                if bn_train {
                    let s1 = col_sums(&dxhat);
                    let s2 = col_sums(&dxhat.component_mul(&c.xhat));
                    let mut out = dxhat;
                    for j in 0..out.ncols() {
                        for i in 0..out.nrows() {
                            let v = out[(i, j)];
                            out[(i, j)] =
                                c.inv_std[j] / b * (b * v - s1[j] - c.xhat[(i, j)] * s2[j]);
                        }
                    }
                    dh = out;
                } else {
                    for (j, mut col) in dxhat.column_iter_mut().enumerate() {
                        let s = c.inv_std[j];
                        col.iter_mut().for_each(|v| *v *= s);
                    }
                    dh = dxhat;
                }
            }
            let dz = dh.zip_map(&c.pre, |g, z| if z > 0.0 { g } else { 0.0 });
            grads[l * k] = c.input.transpose() * &dz;
            grads[l * k + 1] = row_matrix(&col_sums(&dz));
            da = &dz * self.params[l * k].transpose();
        }
        grads
    }

    fn mse(out: &DMatrix<f64>, y: &[f64]) -> f64 {
        out.iter()
            .zip(y)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / y.len() as f64
    }

    /// Loss and gradient without dropout; exposed for gradient checks.
    pub fn loss_and_grad(
        &self,
        x: &DMatrix<f64>,
        y: &[f64],
        bn_train: bool,
    ) -> (f64, Vec<DMatrix<f64>>) {
        let cache = self.forward(x, bn_train, None);
        (Self::mse(&cache.out, y), self.backward(&cache, y, bn_train))
    }

    pub fn loss(&self, x: &DMatrix<f64>, y: &[f64], bn_train: bool) -> f64 {
        Self::mse(&self.forward(x, bn_train, None).out, y)
    }

    /// Inference-mode predictions.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.forward(x, false, None).out.iter().copied().collect()
    }

    fn update_running(&mut self, cache: &Cache, batch: usize) {
        let unbias = batch as f64 / (batch as f64 - 1.0).max(1.0);
        for (l, c) in cache.layers.iter().enumerate() {
            let (rm, rv) = &mut self.running[l];
            for j in 0..rm.ncols() {
                rm[(0, j)] = (1.0 - BN_MOMENTUM) * rm[(0, j)] + BN_MOMENTUM * c.batch_mean[j];
                rv[(0, j)] =
                    (1.0 - BN_MOMENTUM) * rv[(0, j)] + BN_MOMENTUM * c.batch_var[j] * unbias;
            }
        }
    }

    /// Trains on (x, y); validation rows drive the plateau schedule and the
    /// choice of returned weights. Without `val`, a seeded `val_fraction` of
    /// the training rows is held out.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        val: Option<(&[Vec<f64>], &[f64])>,
        params: &MlpParams,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::param(format!(
                "{} rows but {} targets",
                x.len(),
                y.len()
            )));
        }
        if params.batch < 1 || x.len() < params.batch {
            return Err(Error::param(format!(
                "need at least batch = {} rows, got {}",
                params.batch,
                x.len()
            )));
        }
        if !(0.0..1.0).contains(&params.dropout) || !(params.lr > 0.0) {
            return Err(Error::param("dropout must be in [0, 1) and lr positive"));
        }
        if params.hidden.contains(&0) {
            return Err(Error::param("hidden layer widths must be positive"));
        }
        let mut rng = SeededRandomSource::new(params.seed);
        let p = x[0].len();
        let mut net = Self::new(p, params, &mut rng);

        let mut idx: Vec<usize> = (0..x.len()).collect();
        let (train_idx, xv, yv) = match val {
            Some((xv, yv)) => (idx, to_matrix(xv), yv.to_vec()),
            None => {
                rng.shuffle(&mut idx);
                let n_val =
                    ((x.len() as f64 * params.val_fraction).ceil() as usize).clamp(1, x.len() - 1);
                let (v, t) = idx.split_at(n_val);
                let xv: Vec<Vec<f64>> = v.iter().map(|&i| x[i].clone()).collect();
                let yv: Vec<f64> = v.iter().map(|&i| y[i]).collect();
                (t.to_vec(), to_matrix(&xv), yv)
            }
        };
        let mut train_idx = train_idx;

        let mut m: Vec<DMatrix<f64>> = net
            .params
            .iter()
            .map(|q| DMatrix::zeros(q.nrows(), q.ncols()))
            .collect();
        let mut v = m.clone();
        let mut step = 0i32;
        let mut lr = params.lr;
        let mut best_val = f64::INFINITY;
        let mut plateau_ref = f64::INFINITY;
        let mut wait = 0;
        let mut best = (net.params.clone(), net.running.clone(), 0usize);

        for epoch in 0..params.epochs {
            rng.shuffle(&mut train_idx);
            let mut loss_sum = 0.0;
            let mut seen = 0usize;
            for chunk in train_idx.chunks(params.batch) {
                if net.batchnorm && chunk.len() < 2 {
                    continue;
                }
                let xb = DMatrix::from_fn(chunk.len(), p, |i, j| x[chunk[i]][j]);
                let yb: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
                let cache = net.forward(&xb, true, Some(&mut rng));
                let loss = Self::mse(&cache.out, &yb);
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        msg: format!("training loss became {loss}"),
                    });
                }
                let grads = net.backward(&cache, &yb, true);
                if net.batchnorm {
                    net.update_running(&cache, chunk.len());
                }
                step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(step);
                let c2 = 1.0 - ADAM_BETA2.powi(step);
                for ((w, g), (mi, vi)) in net
                    .params
                    .iter_mut()
                    .zip(&grads)
                    .zip(m.iter_mut().zip(v.iter_mut()))
                {
                    for (((wv, gv), mv), vv) in w
                        .iter_mut()
                        .zip(g.iter())
                        .zip(mi.iter_mut())
                        .zip(vi.iter_mut())
                    {
                        *mv = ADAM_BETA1 * *mv + (1.0 - ADAM_BETA1) * gv;
                        *vv = ADAM_BETA2 * *vv + (1.0 - ADAM_BETA2) * gv * gv;
                        *wv -= lr * (*mv / c1) / ((*vv / c2).sqrt() + ADAM_EPS);
                    }
                }
                loss_sum += loss * chunk.len() as f64;
                seen += chunk.len();
            }
            let val_loss = net.loss(&xv, &yv, false);
            if !val_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    msg: format!("validation loss became {val_loss}"),
                });
            }
            net.history.train_loss.push(loss_sum / seen.max(1) as f64);
            net.history.val_loss.push(val_loss);
            net.history.lr.push(lr);
            if val_loss < best_val {
                best_val = val_loss;
                best = (net.params.clone(), net.running.clone(), epoch);
            }
            if val_loss < plateau_ref - params.min_delta {
                plateau_ref = val_loss;
                wait = 0;
            } else {
                wait += 1;
                if wait >= params.patience {
                    lr *= params.plateau_factor;
                    wait = 0;
                }
            }
        }
        net.params = best.0;
        net.running = best.1;
        net.history.best_epoch = best.2;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(batchnorm: bool, seed: u64) -> (Mlp, DMatrix<f64>, Vec<f64>) {
        let mut rng = SeededRandomSource::new(seed);
        let params = MlpParams {
            hidden: vec![5, 4],
            batchnorm,
            dropout: 0.0,
            ..Default::default()
        };
        let mut net = Mlp::new(3, &params, &mut rng);
        // Non-trivial γ, β and running statistics.
        for q in net.params.iter_mut() {
            q.iter_mut().for_each(|v| *v += 0.3 * rng.gaussian());
        }
        for (rm, rv) in net.running.iter_mut() {
            rm.iter_mut().for_each(|v| *v = 0.5 * rng.gaussian());
            rv.iter_mut().for_each(|v| *v = 0.5 + rng.uniform());
        }
        let x = DMatrix::from_fn(8, 3, |_, _| rng.gaussian());
        let y: Vec<f64> = (0..8).map(|_| rng.gaussian()).collect();
        (net, x, y)
    }

    fn gradient_check(batchnorm: bool, bn_train: bool) {
        let (mut net, x, y) = small(batchnorm, 13);
        let (_, grads) = net.loss_and_grad(&x, &y, bn_train);
        let mut rng = SeededRandomSource::new(99);
        let h = 1e-6;
        for _ in 0..10 {
            let t = rng.index(net.params.len());
            let e = rng.index(net.params[t].len());
            let orig = net.params[t][e];
            net.params[t][e] = orig + h;
            let up = net.loss(&x, &y, bn_train);
            net.params[t][e] = orig - h;
            let down = net.loss(&x, &y, bn_train);
            net.params[t][e] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads[t][e];
            let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8);
            assert!(rel < 1e-4, "tensor {t} entry {e}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn gradients_inference_batchnorm() {
        gradient_check(true, false);
    }

    #[test]
    fn gradients_training_batchnorm() {
        gradient_check(true, true);
    }

    #[test]
    fn gradients_without_batchnorm() {
        gradient_check(false, false);
    }

    #[test]
    fn fits_a_linear_target() {
        let mut rng = SeededRandomSource::new(4);
        let x: Vec<Vec<f64>> = (0..256)
            .map(|_| vec![rng.gaussian(), rng.gaussian()])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        // Batch statistics of 32-row batches add noise of a few percent of
        // Var(y) = 4, far above the 1e-3 target, so capacity is checked
        // without batch norm.
        let params = MlpParams {
            hidden: vec![32, 16],
            dropout: 0.0,
            batchnorm: false,
            epochs: 200,
            batch: 32,
            seed: 1,
            ..Default::default()
        };
        let net = Mlp::fit(&x, &y, None, &params).unwrap();
        let pred = net.predict(&to_matrix(&x));
        let mse = pred
            .iter()
            .zip(&y)
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        assert!(mse < 1e-3, "mse {mse}");
    }

    #[test]
    fn identical_runs_without_batchnorm() {
        let mut rng = SeededRandomSource::new(6);
        let x: Vec<Vec<f64>> = (0..64)
            .map(|_| vec![rng.gaussian(), rng.gaussian()])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1]).collect();
        let params = MlpParams {
            hidden: vec![8],
            dropout: 0.0,
            batchnorm: false,
            epochs: 20,
            batch: 16,
            seed: 3,
            ..Default::default()
        };
        let a = Mlp::fit(&x, &y, None, &params).unwrap();
        let b = Mlp::fit(&x, &y, None, &params).unwrap();
        assert_eq!(a.history.train_loss, b.history.train_loss);
    }

    #[test]
    fn divergence_is_reported() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64 * 1e150]).collect();
        let y = vec![1e300; 32];
        let params = MlpParams {
            hidden: vec![4],
            batchnorm: false,
            dropout: 0.0,
            epochs: 5,
            batch: 8,
            ..Default::default()
        };
        assert!(matches!(
            Mlp::fit(&x, &y, None, &params),
            Err(Error::Divergence { .. })
        ));
    }
}
