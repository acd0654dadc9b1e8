use rand::seq::index::sample;

use super::model::{train_loss, ModelParams, TrainConfig, Tree, TreeNode};
use super::pinball::{pinball_subgradient, tau_quantile};
use crate::features::PixelDataset;
use crate::rng::stream;

const N_BINS: usize = 256;
const MIN_GAIN: f64 = 1e-12;

/// Per-feature quantized view of the training matrix. Bin `b` holds the
/// values in `(edges[b-1], edges[b]]`, so `bin(x) <= b` iff `x <= edges[b]`.
struct Binned {
    n: usize,
    edges: Vec<Vec<f64>>,
    /// Column-major bin indices.
    bins: Vec<Vec<u8>>,
}

fn bin_edges(column: &[f64]) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    if sorted.len() <= N_BINS {
        return sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
    }
    // Quantile cuts over distinct values, then midpoints to the next value.
    let mut edges: Vec<f64> = (1..N_BINS)
        .map(|k| {
            let i = k * sorted.len() / N_BINS - 1;
            sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0
        })
        .collect();
    edges.dedup();
    edges
}

impl Binned {
    fn new(data: &PixelDataset) -> Self {
        let d = data.n_features();
        let mut edges = Vec::with_capacity(d);
        let mut bins = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<f64> = data.rows().map(|r| r[j]).collect();
            let e = bin_edges(&col);
            bins.push(col.iter().map(|x| e.partition_point(|edge| edge < x) as u8).collect());
            edges.push(e);
        }
        Self { n: data.len(), edges, bins }
    }

    fn n_features(&self) -> usize {
        self.edges.len()
    }
}

struct Grower<'a> {
    binned: &'a Binned,
    grad: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
    /// Indices of leaf nodes in `nodes`.
    leaves: Vec<usize>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl Grower<'_> {
    fn best_split(&self, rows: &[usize]) -> Option<BestSplit> {
        let total: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let n = rows.len() as f64;
        let parent = total * total / n;
        let mut best: Option<BestSplit> = None;
        let mut sum = [0.0f64; N_BINS];
        let mut cnt = [0usize; N_BINS];
        for f in 0..self.binned.n_features() {
            let n_edges = self.binned.edges[f].len();
            if n_edges == 0 {
                continue;
            }
            sum.iter_mut().for_each(|s| *s = 0.0);
            cnt.iter_mut().for_each(|c| *c = 0);
            let col = &self.binned.bins[f];
            for &i in rows {
                let b = col[i] as usize;
                sum[b] += self.grad[i];
                cnt[b] += 1;
            }
            let (mut sl, mut nl) = (0.0, 0usize);
            for b in 0..n_edges {
                sl += sum[b];
                nl += cnt[b];
                let nr = rows.len() - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let sr = total - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|bs| gain > bs.gain) {
                    best = Some(BestSplit { gain, feature: f, bin: b });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 });
        let split = if depth < self.max_depth && rows.len() >= 2 * self.min_leaf { self.best_split(&rows) } else { None };
        match split {
            None => self.leaves.push(id),
            Some(s) => {
                let col = &self.binned.bins[s.feature];
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] as usize <= s.bin);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                let threshold = self.binned.edges[s.feature][s.bin];
                self.nodes[id] = TreeNode::Split { feature: s.feature, threshold, left, right };
            }
        }
        id
    }
}

/// Leaf node reached by training row `i`, routed on bin indices.
fn route(nodes: &[TreeNode], binned: &Binned, i: usize) -> usize {
    let mut k = 0;
    loop {
        match &nodes[k] {
            TreeNode::Leaf { .. } => return k,
            TreeNode::Split { feature, left, right, threshold } => {
                let b = binned.bins[*feature][i] as usize;
                k = if b < binned.edges[*feature].len() && binned.edges[*feature][b] <= *threshold { *left } else { *right };
            }
        }
    }
}

pub(crate) fn fit(train: &PixelDataset, tau: f64, config: &TrainConfig) -> (ModelParams, Vec<f64>) {
    let binned = Binned::new(train);
    let y = train.targets();
    let n = binned.n;
    let base = tau_quantile(&mut y.to_vec(), tau);
    let mut pred = vec![base; n];
    let mut trace = vec![train_loss(tau, y, &pred)];
    let mut grad = vec![0.0; n];
    let n_sub = ((config.subsample * n as f64).floor() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(config.iterations);
    let mut leaf_of = vec![0usize; n];

    for stage in 0..config.iterations {
        for i in 0..n {
            grad[i] = -pinball_subgradient(tau, y[i], pred[i]);
        }
        let mut rows = if n_sub == n {
            (0..n).collect::<Vec<_>>()
        } else {
            let mut rng = stream(config.seed, &[stage as u64]);
            sample(&mut rng, n, n_sub).into_vec()
        };
        rows.sort_unstable();

        let mut grower =
            Grower { binned: &binned, grad: &grad, max_depth: config.max_depth, min_leaf: config.min_leaf, nodes: Vec::new(), leaves: Vec::new() };
        grower.grow(rows, 0);
        let Grower { mut nodes, leaves, .. } = grower;

        // Line search: each leaf takes the tau-quantile of the residuals of
        // every training row routed to it.
        let mut residuals: Vec<Vec<f64>> = vec![Vec::new(); nodes.len()];
        for i in 0..n {
            let k = route(&nodes, &binned, i);
            leaf_of[i] = k;
            residuals[k].push(y[i] - pred[i]);
        }
        for &k in &leaves {
            let gamma = if residuals[k].is_empty() { 0.0 } else { tau_quantile(&mut residuals[k], tau) };
            nodes[k] = TreeNode::Leaf { value: config.learning_rate * gamma };
        }
        for i in 0..n {
            if let TreeNode::Leaf { value } = nodes[leaf_of[i]] {
                pred[i] += value;
            }
        }
        trace.push(train_loss(tau, y, &pred));
        trees.push(Tree { nodes });
    }
    (ModelParams::BoostedTrees { base, learning_rate: config.learning_rate, trees }, trace)
}
