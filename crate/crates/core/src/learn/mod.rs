//! Linear edge classifiers: class-weighted logistic regression and linear SVM
//! on standardised features.

mod persist;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{EdgeFeatureRow, FEATURE_COUNT, FEATURE_NAMES};

pub use persist::{read_model, read_scores_csv, write_model, ScoreTable};

/// Columns with a training stddev below this are treated as constant.
const CONSTANT_COLUMN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    LinearSvm,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::LinearSvm => "svm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "lr" => Ok(ClassifierKind::Logistic),
            "svm" | "linear_svm" => Ok(ClassifierKind::LinearSvm),
            other => Err(Error::InvalidParameter(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparams {
    /// L2 penalty `lambda / 2 * |w|^2` (bias unpenalised).
    pub l2: f64,
    pub learning_rate: f64,
    /// Step size at epoch `t` is `learning_rate / (1 + lr_decay * t)`.
    pub lr_decay: f64,
    pub max_epochs: usize,
    /// Stop once the (sub)gradient norm falls below this.
    pub tol: f64,
    /// Mini-batch size; 0 means full batch.
    pub batch_size: usize,
    /// Weight classes inversely to their frequency.
    pub balance_classes: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            l2: 1e-3,
            learning_rate: 0.1,
            lr_decay: 1e-3,
            max_epochs: 5000,
            tol: 1e-6,
            batch_size: 0,
            balance_classes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub hyperparams: Hyperparams,
    /// Loss weight of label 0 and label 1 rows.
    pub class_weights: [f64; 2],
}

/// A trained linear model. `weights` act on standardised features
/// `(x - mean) / std`; constant columns have `std = 0` and weight 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainingMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Standardised training matrix with labels and per-row loss weights.
pub struct Batch {
    pub x: Vec<[f64; FEATURE_COUNT]>,
    pub y: Vec<f64>,
    pub c: Vec<f64>,
}

/// Class-weighted logistic loss with L2 penalty and its gradient
/// `(loss, d/dw, d/db)`, averaged over the total row weight.
pub fn logistic_loss_and_grad(
    weights: &[f64; FEATURE_COUNT],
    bias: f64,
    batch: &Batch,
    l2: f64,
) -> (f64, [f64; FEATURE_COUNT], f64) {
    let total: f64 = batch.c.iter().sum();
    let mut loss = 0.0;
    let mut gw = [0.0; FEATURE_COUNT];
    let mut gb = 0.0;
    for ((x, &y), &c) in batch.x.iter().zip(&batch.y).zip(&batch.c) {
        let z = dot(weights, x) + bias;
        loss += c * (softplus(z) - y * z);
        let r = c * (sigmoid(z) - y);
        for (g, xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
        gb += r;
    }
    loss /= total;
    gb /= total;
    let mut penalty = 0.0;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / total + l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, gw, gb)
}

/// Class-weighted hinge loss with L2 penalty and a subgradient.
pub fn hinge_loss_and_subgrad(
    weights: &[f64; FEATURE_COUNT],
    bias: f64,
    batch: &Batch,
    l2: f64,
) -> (f64, [f64; FEATURE_COUNT], f64) {
    let total: f64 = batch.c.iter().sum();
    let mut loss = 0.0;
    let mut gw = [0.0; FEATURE_COUNT];
    let mut gb = 0.0;
    for ((x, &y), &c) in batch.x.iter().zip(&batch.y).zip(&batch.c) {
        let s = if y > 0.5 { 1.0 } else { -1.0 };
        let margin = s * (dot(weights, x) + bias);
        if margin < 1.0 {
            loss += c * (1.0 - margin);
            for (g, xi) in gw.iter_mut().zip(x) {
                *g -= c * s * xi;
            }
            gb -= c * s;
        }
    }
    loss /= total;
    gb /= total;
    let mut penalty = 0.0;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / total + l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, gw, gb)
}

fn dot(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn column_stats(rows: &[EdgeFeatureRow]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut means = vec![0.0; FEATURE_COUNT];
    for r in rows {
        for (m, x) in means.iter_mut().zip(&r.features) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; FEATURE_COUNT];
    for r in rows {
        for ((s, m), x) in stds.iter_mut().zip(&means).zip(&r.features) {
            *s += (x - m).powi(2);
        }
    }
    for s in stds.iter_mut() {
        *s = (*s / n).sqrt();
        if *s < CONSTANT_COLUMN_EPS {
            *s = 0.0;
        }
    }
    (means, stds)
}

fn standardise(features: &[f64; FEATURE_COUNT], means: &[f64], stds: &[f64]) -> [f64; FEATURE_COUNT] {
    let mut z = [0.0; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        if stds[i] > 0.0 {
            z[i] = (features[i] - means[i]) / stds[i];
        }
    }
    z
}

/// Fits a classifier to labelled rows. Identical inputs give a bit-identical
/// model.
pub fn train(
    rows: &[EdgeFeatureRow],
    kind: ClassifierKind,
    params: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    if rows.is_empty() {
        return Err(Error::TrainingData("no rows".into()));
    }
    let mut counts = [0usize; 2];
    for r in rows {
        match r.label {
            Some(l) if l <= 1 => counts[l as usize] += 1,
            Some(l) => return Err(Error::TrainingData(format!("label {l} is not 0/1"))),
            None => {
                return Err(Error::TrainingData(format!(
                    "row {}:{} has no label",
                    r.instance,
                    r.edge_id + 1
                )))
            }
        }
        if r.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::TrainingData(format!(
                "row {}:{} has a non-finite feature",
                r.instance,
                r.edge_id + 1
            )));
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::TrainingData("need rows of both classes".into()));
    }
    let n = rows.len() as f64;
    let class_weights = if params.balance_classes {
        [n / (2.0 * counts[0] as f64), n / (2.0 * counts[1] as f64)]
    } else {
        [1.0, 1.0]
    };
    let (means, stds) = column_stats(rows);
    let full = Batch {
        x: rows
            .iter()
            .map(|r| standardise(&r.features, &means, &stds))
            .collect(),
        y: rows.iter().map(|r| f64::from(r.label.unwrap())).collect(),
        c: rows
            .iter()
            .map(|r| class_weights[r.label.unwrap() as usize])
            .collect(),
    };
    let loss_fn = match kind {
        ClassifierKind::Logistic => logistic_loss_and_grad,
        ClassifierKind::LinearSvm => hinge_loss_and_subgrad,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let batch_size = if params.batch_size == 0 {
        rows.len()
    } else {
        params.batch_size
    };
    let mut w = [0.0; FEATURE_COUNT];
    let mut b = 0.0;
    let mut best = (f64::INFINITY, w, b);
    let mut epochs = 0;
    for epoch in 0..params.max_epochs {
        let (full_loss, gw, gb) = loss_fn(&w, b, &full, params.l2);
        if full_loss < best.0 {
            best = (full_loss, w, b);
        }
        let grad_norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if grad_norm < params.tol {
            break;
        }
        epochs = epoch + 1;
        let step = params.learning_rate / (1.0 + params.lr_decay * epoch as f64);
        if batch_size >= rows.len() {
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * g;
            }
            b -= step * gb;
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                let mini = Batch {
                    x: chunk.iter().map(|&i| full.x[i]).collect(),
                    y: chunk.iter().map(|&i| full.y[i]).collect(),
                    c: chunk.iter().map(|&i| full.c[i]).collect(),
                };
                let (_, gw, gb) = loss_fn(&w, b, &mini, params.l2);
                for (wi, g) in w.iter_mut().zip(&gw) {
                    *wi -= step * g;
                }
                b -= step * gb;
            }
        }
    }
    let (final_loss, _, _) = loss_fn(&w, b, &full, params.l2);
    // Subgradient and stochastic steps are not monotone; keep the best iterate.
    if kind == ClassifierKind::LinearSvm || batch_size < rows.len() {
        if best.0 < final_loss {
            w = best.1;
            b = best.2;
        }
    }
    Ok(TrainedModel {
        kind,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        means,
        stds,
        weights: w.to_vec(),
        bias: b,
        meta: TrainingMeta {
            seed,
            epochs,
            hyperparams: *params,
            class_weights,
        },
    })
}

impl TrainedModel {
    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count(),
                found: features.len(),
            });
        }
        let mut z = self.bias;
        for i in 0..features.len() {
            if self.stds[i] > 0.0 {
                z += self.weights[i] * (features[i] - self.means[i]) / self.stds[i];
            }
        }
        Ok(z)
    }

    /// Score in [0, 1]: the logistic of the margin, for both model kinds.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        self.margin(features).map(sigmoid)
    }

    /// Coefficients on the raw (unstandardised) feature scale.
    pub fn coefficients(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.stds)
            .map(|(w, s)| if *s > 0.0 { w / s } else { 0.0 })
            .collect()
    }
}

/// Scores rows in parallel; output order matches input order.
pub fn predict(model: &TrainedModel, rows: &[EdgeFeatureRow]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    rows.par_iter().map(|r| model.score(&r.features)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub coefficient: f64,
    pub stddev: f64,
    /// `coefficient * stddev`, signed.
    pub importance: f64,
}

/// Importance of each feature as its raw-scale coefficient times the
/// population stddev of that feature over `rows`.
pub fn feature_importance(model: &TrainedModel, rows: &[EdgeFeatureRow]) -> Vec<FeatureImportance> {
    let (_, stds) = column_stats(rows);
    model
        .coefficients()
        .into_iter()
        .zip(stds)
        .zip(&model.feature_names)
        .map(|((coefficient, stddev), name)| FeatureImportance {
            feature: name.clone(),
            coefficient,
            stddev,
            importance: coefficient * stddev,
        })
        .collect()
}

/// Importances ordered by decreasing magnitude (stable for ties).
pub fn rank_by_magnitude(importances: &[FeatureImportance]) -> Vec<FeatureImportance> {
    let mut sorted = importances.to_vec();
    sorted.sort_by(|a, b| b.importance.abs().total_cmp(&a.importance.abs()));
    sorted
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub prune_rate: f64,
    pub pruned: usize,
    /// Pruned edges that belong to the optimal tree.
    pub false_prunes: usize,
    /// Pruned edges outside the optimal tree.
    pub true_prunes: usize,
    pub kept_positive: usize,
    pub kept_negative: usize,
}

/// For each threshold, prunes edges scoring strictly below it and tallies
/// the confusion counts against the labels.
pub fn sweep_scores(scores: &[f64], labels: &[Option<u8>], thresholds: &[f64]) -> Vec<SweepPoint> {
    let m = scores.len();
    thresholds
        .iter()
        .map(|&threshold| {
            let mut p = SweepPoint {
                threshold,
                prune_rate: 0.0,
                pruned: 0,
                false_prunes: 0,
                true_prunes: 0,
                kept_positive: 0,
                kept_negative: 0,
            };
            for (&s, &l) in scores.iter().zip(labels) {
                let positive = l == Some(1);
                if s < threshold {
                    p.pruned += 1;
                    if positive {
                        p.false_prunes += 1;
                    } else {
                        p.true_prunes += 1;
                    }
                } else if positive {
                    p.kept_positive += 1;
                } else {
                    p.kept_negative += 1;
                }
            }
            p.prune_rate = if m == 0 { 0.0 } else { p.pruned as f64 / m as f64 };
            p
        })
        .collect()
}

pub fn sweep_thresholds(
    model: &TrainedModel,
    rows: &[EdgeFeatureRow],
    thresholds: &[f64],
) -> Result<Vec<SweepPoint>> {
    let scores = predict(model, rows)?;
    let labels: Vec<Option<u8>> = rows.iter().map(|r| r.label).collect();
    Ok(sweep_scores(&scores, &labels, thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(features: [f64; FEATURE_COUNT], label: Option<u8>) -> EdgeFeatureRow {
        EdgeFeatureRow {
            instance: "t".into(),
            edge_id: 0,
            features,
            label,
        }
    }

    fn one_d(x: f64) -> [f64; FEATURE_COUNT] {
        let mut f = [0.0; FEATURE_COUNT];
        f[0] = x;
        f
    }

    fn separable() -> Vec<EdgeFeatureRow> {
        (0..50)
            .flat_map(|_| [row(one_d(0.0), Some(0)), row(one_d(1.0), Some(1))])
            .collect()
    }

    #[test]
    fn learns_separable_data() {
        for kind in [ClassifierKind::Logistic, ClassifierKind::LinearSvm] {
            let rows = separable();
            let m = train(&rows, kind, &Hyperparams::default(), 1).unwrap();
            assert!(m.weights[0] > 0.0, "{kind:?}");
            assert!(m.weights[1..].iter().all(|&w| w == 0.0));
            let scores = predict(&m, &rows).unwrap();
            let correct = rows
                .iter()
                .zip(&scores)
                .filter(|(r, &s)| (s >= 0.5) == (r.label == Some(1)))
                .count();
            assert_eq!(correct, rows.len());
        }
    }

    #[test]
    fn zero_epochs_scores_half() {
        let params = Hyperparams {
            max_epochs: 0,
            ..Default::default()
        };
        let m = train(&separable(), ClassifierKind::Logistic, &params, 0).unwrap();
        assert!(predict(&m, &separable()).unwrap().iter().all(|&s| s == 0.5));
        assert_eq!(m.meta.epochs, 0);
    }

    #[test]
    fn rejects_bad_training_data() {
        let single: Vec<_> = (0..5).map(|_| row(one_d(1.0), Some(1))).collect();
        assert!(train(&single, ClassifierKind::Logistic, &Hyperparams::default(), 0).is_err());
        let mut nan = separable();
        nan[0].features[3] = f64::NAN;
        assert!(train(&nan, ClassifierKind::Logistic, &Hyperparams::default(), 0).is_err());
        let mut unlabeled = separable();
        unlabeled[1].label = None;
        assert!(train(&unlabeled, ClassifierKind::Logistic, &Hyperparams::default(), 0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let m = train(&separable(), ClassifierKind::Logistic, &Hyperparams::default(), 0).unwrap();
        assert!(matches!(
            m.score(&[0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 12,
                found: 3
            })
        ));
    }

    #[test]
    fn margin_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn importance_arithmetic() {
        let mut m = train(&separable(), ClassifierKind::Logistic, &Hyperparams::default(), 0).unwrap();
        // Raw coefficient 2.0 on a column whose stddev over `rows` is 0.5.
        m.stds[0] = 0.5;
        m.weights[0] = 1.0;
        let imp = feature_importance(&m, &separable());
        assert_eq!(imp[0].coefficient, 2.0);
        assert_eq!(imp[0].stddev, 0.5);
        assert_eq!(imp[0].importance, 1.0);
        assert!(imp[1..].iter().all(|f| f.importance == 0.0));
        assert_eq!(rank_by_magnitude(&imp)[0].feature, "lp_value");
    }

    #[test]
    fn sweep_boundaries() {
        let scores = [0.1, 0.4, 0.6, 0.9];
        let labels = [Some(0), Some(1), Some(0), Some(1)];
        let pts = sweep_scores(&scores, &labels, &[0.0, 0.5, 1.0 + 1e-9]);
        assert_eq!(pts[0].prune_rate, 0.0);
        assert_eq!(pts[1].pruned, 2);
        assert_eq!(pts[1].false_prunes, 1);
        assert_eq!(pts[1].kept_positive, 1);
        assert_eq!(pts[2].prune_rate, 1.0);
    }
}
