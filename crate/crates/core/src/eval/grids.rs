//! Hyperparameter grids consumed by the inner selection loop. These are
//! artifact choices, recorded in every report header.

use crate::models::{ModelKind, ModelSpec};

/// The per-kind search grid: logistic regression over learning rate and
/// L2, trees over depth and leaf size, forests over depth and feature
/// subsampling (0 = sqrt rule), SVM over the margin parameter.
pub fn default_grid(kind: ModelKind, seed: u64) -> Vec<ModelSpec> {
    match kind {
        ModelKind::LogisticRegression => {
            let mut grid = Vec::new();
            for lr in [1e-2, 1e-3] {
                for l2 in [0.0, 1e-3] {
                    grid.push(
                        ModelSpec::new(kind, seed)
                            .with("learning_rate", lr)
                            .with("l2", l2),
                    );
                }
            }
            grid
        }
        ModelKind::DecisionTree => {
            let mut grid = Vec::new();
            for depth in [4.0, 8.0, 16.0] {
                for min_leaf in [1.0, 5.0] {
                    grid.push(
                        ModelSpec::new(kind, seed)
                            .with("max_depth", depth)
                            .with("min_leaf", min_leaf),
                    );
                }
            }
            grid
        }
        ModelKind::RandomForest => {
            let mut grid = Vec::new();
            for depth in [8.0, 16.0] {
                for subsample in [0.5, 0.0] {
                    grid.push(
                        ModelSpec::new(kind, seed)
                            .with("n_trees", 100.0)
                            .with("max_depth", depth)
                            .with("feature_subsample", subsample),
                    );
                }
            }
            grid
        }
        ModelKind::LinearSvm => [0.1, 1.0, 10.0]
            .into_iter()
            .map(|c| ModelSpec::new(kind, seed).with("c_margin", c))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_valid_and_sized_as_documented() {
        for (kind, expected) in [
            (ModelKind::LogisticRegression, 4),
            (ModelKind::DecisionTree, 6),
            (ModelKind::RandomForest, 4),
            (ModelKind::LinearSvm, 3),
        ] {
            let grid = default_grid(kind, 0);
            assert_eq!(grid.len(), expected, "{}", kind.name());
            for spec in &grid {
                spec.validate().unwrap();
            }
        }
    }
}
