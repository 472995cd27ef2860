//! Shallow multi-label classifiers: one independent binary scorer per
//! fault mode (one-vs-rest), each emitting a continuous score where larger
//! means more likely faulty. Ordering is all the AUROC consumer needs.

pub mod linear;
pub mod tree;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::LabelVector;
use crate::error::{Error, Result};
use linear::LinearModel;
use tree::{ForestParams, TreeModel, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    LinearSvm,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::LinearSvm => "linear_svm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logistic_regression" => Ok(ModelKind::LogisticRegression),
            "decision_tree" => Ok(ModelKind::DecisionTree),
            "random_forest" => Ok(ModelKind::RandomForest),
            "linear_svm" => Ok(ModelKind::LinearSvm),
            other => Err(Error::Model(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Model kind plus numeric hyperparameters. Booleans are encoded as 0/1;
/// `feature_subsample = 0` selects ceil(sqrt(F)) features per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Gradient-norm stopping tolerance for the gradient-descent fits.
pub const GRADIENT_TOL: f64 = 1e-6;

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let mut spec = Self {
            kind,
            hyperparameters: BTreeMap::new(),
            seed,
        };
        let defaults: &[(&str, f64)] = match kind {
            ModelKind::LogisticRegression => &[
                ("learning_rate", 0.1),
                ("l2", 0.0),
                ("epochs", 2_000.0),
                ("standardize", 1.0),
            ],
            ModelKind::DecisionTree => &[("max_depth", 8.0), ("min_leaf", 1.0)],
            ModelKind::RandomForest => &[
                ("n_trees", 100.0),
                ("max_depth", 16.0),
                ("min_leaf", 1.0),
                ("feature_subsample", 0.5),
                ("bootstrap", 1.0),
            ],
            ModelKind::LinearSvm => &[
                ("c_margin", 1.0),
                ("learning_rate", 0.01),
                ("epochs", 2_000.0),
                ("standardize", 1.0),
            ],
        };
        for (k, v) in defaults {
            spec.hyperparameters.insert((*k).to_string(), *v);
        }
        spec
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.hyperparameters
            .get(key)
            .copied()
            .ok_or_else(|| Error::Model(format!("{}: missing hyperparameter '{key}'", self.kind.name())))
    }

    fn get_positive(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        if v <= 0.0 {
            return Err(Error::Model(format!(
                "{}: hyperparameter '{key}' must be positive, got {v}",
                self.kind.name()
            )));
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::LogisticRegression => {
                self.get_positive("learning_rate")?;
                self.get_positive("epochs")?;
                let l2 = self.get("l2")?;
                if l2 < 0.0 {
                    return Err(Error::Model("l2 must be non-negative".into()));
                }
            }
            ModelKind::DecisionTree => {
                self.get_positive("max_depth")?;
                self.get_positive("min_leaf")?;
            }
            ModelKind::RandomForest => {
                self.get_positive("n_trees")?;
                self.get_positive("max_depth")?;
                self.get_positive("min_leaf")?;
                let fs = self.get("feature_subsample")?;
                if !(0.0..=1.0).contains(&fs) {
                    return Err(Error::Model(format!(
                        "feature_subsample must lie in [0, 1], got {fs}"
                    )));
                }
                self.get("bootstrap")?;
            }
            ModelKind::LinearSvm => {
                self.get_positive("c_margin")?;
                self.get_positive("learning_rate")?;
                self.get_positive("epochs")?;
            }
        }
        Ok(())
    }

    /// Scalar used only for deterministic tie-breaks during model
    /// selection; smaller means simpler.
    pub fn complexity(&self) -> f64 {
        match self.kind {
            ModelKind::LogisticRegression => {
                // stronger regularization = simpler
                1.0 / (1.0 + self.get("l2").unwrap_or(0.0))
            }
            ModelKind::DecisionTree => self.get("max_depth").unwrap_or(0.0),
            ModelKind::RandomForest => {
                self.get("n_trees").unwrap_or(0.0) * self.get("max_depth").unwrap_or(0.0)
            }
            ModelKind::LinearSvm => self.get("c_margin").unwrap_or(0.0),
        }
    }

    /// Score threshold separating the classes for this kind: 0.5 for
    /// probability/fraction scorers, 0 for margins.
    pub fn default_threshold(&self) -> f64 {
        match self.kind {
            ModelKind::LinearSvm => 0.0,
            _ => 0.5,
        }
    }

    fn standardize(&self) -> bool {
        self.hyperparameters
            .get("standardize")
            .map(|&v| v != 0.0)
            .unwrap_or(false)
    }

    fn tree_params(&self) -> Result<TreeParams> {
        Ok(TreeParams {
            max_depth: self.get_positive("max_depth")? as usize,
            min_leaf: self.get_positive("min_leaf")? as usize,
            features_per_split: None,
        })
    }
}

/// Per-feature affine map fit on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let dim = x.first().map(Vec::len).unwrap_or(0);
        let n = x.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in x {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0 // constant column: leave centred values at 0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

/// One fitted binary scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinaryScorer {
    Logistic(LinearModel),
    Svm(LinearModel),
    Tree(TreeModel),
    Forest(Vec<TreeModel>),
    /// Single-class training data; emits the constant positive fraction.
    Degenerate { score: f64 },
}

impl BinaryScorer {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            BinaryScorer::Logistic(m) => m.probability(x),
            BinaryScorer::Svm(m) => m.margin(x),
            BinaryScorer::Tree(t) => t.score(x),
            BinaryScorer::Forest(trees) => tree::forest_score(trees, x),
            BinaryScorer::Degenerate { score } => *score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub n_train_rows: usize,
    pub n_features: usize,
    /// Mode indices whose sub-model is degenerate (single-class data).
    pub degenerate_modes: Vec<usize>,
}

/// F independent binary scorers, index-aligned with the profile's fault
/// modes, plus the training-side standardization if the spec asked for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub spec: ModelSpec,
    pub standardizer: Option<Standardizer>,
    pub per_mode: Vec<BinaryScorer>,
    pub fit_metadata: FitMetadata,
}

fn check_matrix(x: &[Vec<f64>]) -> Result<usize> {
    let dim = x
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Model("empty training set".into()))?;
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Model(format!(
                "row {i} has {} features, expected {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model(format!("row {i} contains a non-finite value")));
        }
    }
    Ok(dim)
}

fn fit_binary(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<BinaryScorer> {
    let n_pos = y.iter().filter(|&&v| v > 0.5).count();
    if n_pos == 0 || n_pos == y.len() {
        return Ok(BinaryScorer::Degenerate {
            score: n_pos as f64 / y.len() as f64,
        });
    }
    match spec.kind {
        ModelKind::LogisticRegression => Ok(BinaryScorer::Logistic(linear::fit_logistic(
            x,
            y,
            spec.get_positive("learning_rate")?,
            spec.get("l2")?,
            spec.get_positive("epochs")? as usize,
            GRADIENT_TOL,
        ))),
        ModelKind::LinearSvm => {
            let ys: Vec<f64> = y.iter().map(|&v| if v > 0.5 { 1.0 } else { -1.0 }).collect();
            Ok(BinaryScorer::Svm(linear::fit_svm(
                x,
                &ys,
                spec.get_positive("learning_rate")?,
                spec.get_positive("c_margin")?,
                spec.get_positive("epochs")? as usize,
                GRADIENT_TOL,
            )))
        }
        ModelKind::DecisionTree => Ok(BinaryScorer::Tree(tree::fit_tree(
            x,
            y,
            (0..x.len()).collect(),
            spec.tree_params()?,
            None,
        ))),
        ModelKind::RandomForest => {
            let n_features = x[0].len();
            let fraction = spec.get("feature_subsample")?;
            let per_split = if fraction == 0.0 {
                (n_features as f64).sqrt().ceil() as usize
            } else {
                ((n_features as f64 * fraction).ceil() as usize).max(1)
            };
            let params = ForestParams {
                n_trees: spec.get_positive("n_trees")? as usize,
                tree: TreeParams {
                    features_per_split: Some(per_split.min(n_features)),
                    ..spec.tree_params()?
                },
                bootstrap: spec.get("bootstrap")? != 0.0,
            };
            Ok(BinaryScorer::Forest(tree::fit_forest(x, y, params, spec.seed)))
        }
    }
}

/// Fit one one-vs-rest scorer per fault mode. Deterministic for a fixed
/// spec and row order.
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], labels: &[LabelVector]) -> Result<MultiLabelModel> {
    spec.validate()?;
    if x.len() != labels.len() {
        return Err(Error::Model(format!(
            "{} rows but {} labels",
            x.len(),
            labels.len()
        )));
    }
    let dim = check_matrix(x)?;
    let n_modes = labels
        .first()
        .map(LabelVector::len)
        .ok_or_else(|| Error::Model("empty label set".into()))?;

    let standardizer = spec.standardize().then(|| Standardizer::fit(x));
    let x_fit: Vec<Vec<f64>> = match &standardizer {
        Some(s) => s.apply(x),
        None => x.to_vec(),
    };

    let mut per_mode = Vec::with_capacity(n_modes);
    let mut degenerate_modes = Vec::new();
    for mode in 0..n_modes {
        let y: Vec<f64> = labels
            .iter()
            .map(|l| if l.bit(mode) { 1.0 } else { 0.0 })
            .collect();
        let scorer = fit_binary(spec, &x_fit, &y)?;
        if matches!(scorer, BinaryScorer::Degenerate { .. }) {
            degenerate_modes.push(mode);
        }
        per_mode.push(scorer);
    }

    Ok(MultiLabelModel {
        spec: spec.clone(),
        standardizer,
        per_mode,
        fit_metadata: FitMetadata {
            n_train_rows: x.len(),
            n_features: dim,
            degenerate_modes,
        },
    })
}

/// Score matrix: rows x F, one column per fault mode.
pub fn score(model: &MultiLabelModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != model.fit_metadata.n_features {
            return Err(Error::Model(format!(
                "row {i} has {} features, model was fit on {}",
                row.len(),
                model.fit_metadata.n_features
            )));
        }
    }
    Ok(x.iter()
        .map(|row| {
            let row = match &model.standardizer {
                Some(s) => s.apply_row(row),
                None => row.to_vec(),
            };
            model.per_mode.iter().map(|m| m.score(&row)).collect()
        })
        .collect())
}

/// Elementwise `score >= threshold`; thresholds are per fault mode.
pub fn predict_binary(
    model: &MultiLabelModel,
    x: &[Vec<f64>],
    thresholds: &[f64],
) -> Result<Vec<Vec<bool>>> {
    if thresholds.len() != model.per_mode.len() {
        return Err(Error::Model(format!(
            "{} thresholds for {} modes",
            thresholds.len(),
            model.per_mode.len()
        )));
    }
    Ok(score(model, x)?
        .into_iter()
        .map(|row| row.iter().zip(thresholds).map(|(&s, &t)| s >= t).collect())
        .collect())
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    model: MultiLabelModel,
}

/// Persist a fitted model for reproducible re-scoring.
pub fn save_model(model: &MultiLabelModel, path: &Path) -> Result<()> {
    let saved = SavedModel {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&saved)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MultiLabelModel> {
    let text = std::fs::read_to_string(path)?;
    let saved: SavedModel = serde_json::from_str(&text)?;
    if saved.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported model format version {}",
            saved.format_version
        )));
    }
    Ok(saved.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_labels(y: &[u8]) -> Vec<LabelVector> {
        y.iter()
            .map(|&b| {
                if b == 1 {
                    LabelVector::single(1, 0)
                } else {
                    LabelVector::healthy(1)
                }
            })
            .collect()
    }

    fn separable() -> (Vec<Vec<f64>>, Vec<LabelVector>) {
        let x = vec![
            vec![0.0, 0.1],
            vec![0.2, 0.0],
            vec![0.1, 0.2],
            vec![1.0, 1.1],
            vec![1.2, 0.9],
            vec![0.9, 1.0],
        ];
        (x, binary_labels(&[0, 0, 0, 1, 1, 1]))
    }

    #[test]
    fn logistic_reaches_perfect_training_accuracy_on_separable_rows() {
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::LogisticRegression, 0).with("epochs", 5_000.0);
        let model = fit(&spec, &x, &labels).unwrap();
        let pred = predict_binary(&model, &x, &[0.5]).unwrap();
        for (p, l) in pred.iter().zip(&labels) {
            assert_eq!(p[0], l.bit(0));
        }
    }

    #[test]
    fn scores_order_positives_above_negatives_when_separable() {
        let (x, labels) = separable();
        for kind in [
            ModelKind::LogisticRegression,
            ModelKind::DecisionTree,
            ModelKind::RandomForest,
            ModelKind::LinearSvm,
        ] {
            let spec = ModelSpec::new(kind, 3).with("epochs", 5_000.0);
            let model = fit(&spec, &x, &labels).unwrap();
            let s = score(&model, &x).unwrap();
            let min_pos = s[3..].iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
            let max_neg = s[..3].iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
            assert!(
                min_pos > max_neg,
                "{}: min positive {min_pos} <= max negative {max_neg}",
                kind.name()
            );
        }
    }

    #[test]
    fn single_class_mode_becomes_degenerate_constant() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        // mode 0 mixed, mode 1 all-negative
        let labels = vec![
            LabelVector::from_bits(vec![1, 0]).unwrap(),
            LabelVector::from_bits(vec![0, 0]).unwrap(),
            LabelVector::from_bits(vec![1, 0]).unwrap(),
        ];
        let spec = ModelSpec::new(ModelKind::DecisionTree, 0);
        let model = fit(&spec, &x, &labels).unwrap();
        assert_eq!(model.fit_metadata.degenerate_modes, vec![1]);
        let s = score(&model, &x).unwrap();
        assert!(s.iter().all(|r| r[1] == 0.0), "degenerate column must be constant");
    }

    #[test]
    fn extreme_thresholds_saturate_predictions() {
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::RandomForest, 1).with("n_trees", 5.0);
        let model = fit(&spec, &x, &labels).unwrap();
        let ones = predict_binary(&model, &x, &[f64::NEG_INFINITY]).unwrap();
        assert!(ones.iter().all(|r| r[0]));
        let zeros = predict_binary(&model, &x, &[f64::INFINITY]).unwrap();
        assert!(zeros.iter().all(|r| !r[0]));
    }

    #[test]
    fn fit_and_score_are_deterministic() {
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::RandomForest, 11).with("n_trees", 20.0);
        let m1 = fit(&spec, &x, &labels).unwrap();
        let m2 = fit(&spec, &x, &labels).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(score(&m1, &x).unwrap(), score(&m2, &x).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::DecisionTree, 0);
        let model = fit(&spec, &x, &labels).unwrap();
        assert!(score(&model, &[vec![1.0]]).is_err());
    }

    #[test]
    fn model_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::RandomForest, 5).with("n_trees", 10.0);
        let model = fit(&spec, &x, &labels).unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(score(&loaded, &x).unwrap(), score(&model, &x).unwrap());
    }

    #[test]
    fn standardization_is_fit_on_train_only() {
        let (x, labels) = separable();
        let spec = ModelSpec::new(ModelKind::LogisticRegression, 0);
        let model = fit(&spec, &x, &labels).unwrap();
        let s = model.standardizer.as_ref().expect("standardizer stored");
        // means are the training-column means
        let mean0: f64 = x.iter().map(|r| r[0]).sum::<f64>() / x.len() as f64;
        assert!((s.mean[0] - mean0).abs() < 1e-12);
        // scoring far-away rows uses the training statistics unchanged
        let far = vec![vec![100.0, 100.0]];
        let sc = score(&model, &far).unwrap();
        assert!(sc[0][0] > 0.5);
    }
}
