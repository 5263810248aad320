//! CART regression trees.

use serde::{Deserialize, Serialize};

use crate::rng::SeededRandomSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root first.
    pub nodes: Vec<Node>,
}

/// Feature-major copy of a design matrix.
pub(crate) struct Columns {
    pub cols: Vec<Vec<f64>>,
}

impl Columns {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        Self {
            cols: (0..p).map(|j| x.iter().map(|r| r[j]).collect()).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction of the sum of squared errors.
    pub gain: f64,
    /// Rows going left.
    pub n_left: usize,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Adjacent floats: the midpoint may round up onto b.
    if m < b {
        m
    } else {
        a
    }
}

/// Best split of `rows` over `features` (ascending). Ties within
/// 1e-12·SSE(node) keep the earlier feature, then the lower threshold.
pub(crate) fn best_split(
    cols: &Columns,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let sse: f64 = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    if sse <= 0.0 {
        return None;
    }
    let tol = 1e-12 * sse;
    let total: f64 = rows.iter().map(|&i| y[i] - mean).sum();
    let mut order: Vec<usize> = rows.to_vec();
    let mut best: Option<BestSplit> = None;
    for &f in features {
        let col = &cols.cols[f];
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut left = 0.0;
        for k in 0..n - 1 {
            left += y[order[k]] - mean;
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let (a, b) = (col[order[k]], col[order[k + 1]]);
            if a == b {
                continue;
            }
            let right = total - left;
            // SSE(node) − SSE(children) with y centered at the node mean.
            let gain =
                left * left / nl as f64 + right * right / nr as f64 - total * total / n as f64;
            if best.is_none_or(|bs| gain > bs.gain + tol) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: midpoint(a, b),
                    gain,
                    n_left: nl,
                });
            }
        }
    }
    best.filter(|b| b.gain > tol)
}

impl DecisionTree {
    /// Fits on `rows` of the data (repeats allowed, as in a bootstrap).
    pub(crate) fn fit_rows(
        cols: &Columns,
        y: &[f64],
        rows: Vec<usize>,
        params: &TreeParams,
        rng: &mut SeededRandomSource,
    ) -> Self {
        let p = cols.n_features();
        let k = params.max_features.map_or(p, |m| m.clamp(1, p.max(1)));
        let mut nodes = Vec::new();
        // (node slot, rows, depth)
        let mut stack = vec![(0usize, rows, 0usize)];
        nodes.push(Node::Leaf { value: 0.0 });
        let mut pool: Vec<usize> = (0..p).collect();
        while let Some((slot, rows, depth)) = stack.pop() {
            let value = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len().max(1) as f64;
            nodes[slot] = Node::Leaf { value };
            if params.max_depth.is_some_and(|d| depth >= d) {
                continue;
            }
            let features: Vec<usize> = if k < p {
                // Partial Fisher-Yates over the pool, then sorted.
                for i in 0..k {
                    let j = i + rng.index(p - i);
                    pool.swap(i, j);
                }
                let mut f = pool[..k].to_vec();
                f.sort_unstable();
                f
            } else {
                (0..p).collect()
            };
            let Some(split) = best_split(cols, y, &rows, &features, params.min_samples_leaf) else {
                continue;
            };
            let col = &cols.cols[split.feature];
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| col[i] <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right: left + 1,
            };
            // Right pushed first so the left subtree is built first.
            stack.push((left + 1, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        Self { nodes }
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &TreeParams, seed: u64) -> Self {
        let cols = Columns::new(x);
        Self::fit_rows(
            &cols,
            y,
            (0..y.len()).collect(),
            params,
            &mut SeededRandomSource::new(seed),
        )
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}
