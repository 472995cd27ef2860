//! Gini decision tree with midpoint threshold splits, and the bootstrap
//! forest built on top of it.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Fraction of positive training rows in the leaf.
        score: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { score } => return *score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of candidate features per split; `None` = all features.
    pub features_per_split: Option<usize>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
}

fn gini(n_pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = n_pos / n;
    2.0 * p * (1.0 - p)
}

impl<'a> Builder<'a> {
    /// Best (feature, midpoint threshold) by weighted Gini impurity over the
    /// candidate features; first strictly-better candidate wins, so the
    /// result is deterministic for a fixed candidate order.
    fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<(usize, f64, f64)> {
        let n = rows.len() as f64;
        let total_pos: f64 = rows.iter().map(|&i| self.y[i]).sum();
        if total_pos == 0.0 || total_pos == n {
            return None; // pure node
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .expect("features must not contain NaN")
            });
            let mut left_pos = 0.0;
            for (k, &i) in order.iter().enumerate().take(order.len() - 1) {
                left_pos += self.y[i];
                let v = self.x[i][f];
                let v_next = self.x[order[k + 1]][f];
                if v == v_next {
                    continue; // threshold only between distinct values
                }
                let n_left = (k + 1) as f64;
                let n_right = n - n_left;
                if (n_left as usize) < self.params.min_leaf
                    || (n_right as usize) < self.params.min_leaf
                {
                    continue;
                }
                let impurity = (n_left * gini(left_pos, n_left)
                    + n_right * gini(total_pos - left_pos, n_right))
                    / n;
                if best.is_none_or(|(_, _, bi)| impurity < bi) {
                    best = Some((f, 0.5 * (v + v_next), impurity));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut Option<&mut ChaCha8Rng>) -> usize {
        let n = rows.len() as f64;
        let pos: f64 = rows.iter().map(|&i| self.y[i]).sum();

        let leaf = |nodes: &mut Vec<Node>| {
            nodes.push(Node::Leaf { score: pos / n });
            nodes.len() - 1
        };

        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return leaf(&mut self.nodes);
        }

        let n_features = self.x[0].len();
        let candidates: Vec<usize> = match (self.params.features_per_split, rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < n_features => {
                let mut picked: Vec<usize> = sample_indices(rng, n_features, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..n_features).collect(),
        };

        match self.best_split(&rows, &candidates) {
            None => leaf(&mut self.nodes),
            Some((feature, threshold, _)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let idx = self.nodes.len();
                self.nodes.push(Node::Leaf { score: 0.0 }); // placeholder
                let left = self.build(left_rows, depth + 1, rng);
                let right = self.build(right_rows, depth + 1, rng);
                self.nodes[idx] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                idx
            }
        }
    }
}

/// Fit a single Gini tree on the given rows. `rng` is only consulted when
/// `features_per_split` restricts the candidate set.
pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    params: TreeParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> TreeModel {
    let mut builder = Builder {
        x,
        y,
        params,
        nodes: Vec::new(),
    };
    builder.build(rows, 0, &mut rng);
    TreeModel {
        nodes: builder.nodes,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

/// Fit `n_trees` trees; tree `t` owns the generator seeded `seed + t`, so
/// refitting any prefix of the ensemble is reproducible.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], params: ForestParams, seed: u64) -> Vec<TreeModel> {
    let n = x.len();
    (0..params.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, rows, params.tree, Some(&mut rng))
        })
        .collect()
}

pub fn forest_score(trees: &[TreeModel], x: &[f64]) -> f64 {
    trees.iter().map(|t| t.score(x)).sum::<f64>() / trees.len() as f64
}
