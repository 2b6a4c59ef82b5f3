//! Linear soft-margin SVM, precision/recall and k-fold cross-validation.
//!
//! The model minimizes `½‖π‖² + (C/s) Σ max(0, 1 − hᵢ(π·pᵢ − π₀))` over
//! z-score standardized features. Training solves the dual with sequential
//! minimal optimization (maximal-violating pair with second-order choice of
//! the partner), then re-optimizes `π₀` exactly for the final `π`.

use serde::{Deserialize, Serialize};

use super::LearnError;

const KKT_TOLERANCE: f64 = 1e-6;
const MAX_SMO_STEPS: usize = 2_000_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// `π` in standardized feature space.
    pub weights: Vec<f64>,
    /// `π₀`; the model answers 1 when `π·p̃ ≥ π₀`.
    pub intercept: f64,
    pub mean: Vec<f64>,
    /// Population standard deviation, 1 for constant features.
    pub scale: Vec<f64>,
}

impl SvmModel {
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, &self.standardize(x)) - self.intercept
    }

    pub fn classify(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// A trained SVM, or a constant answer when training data had one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Svm(SvmModel),
    Constant(i8),
}

impl Classifier {
    pub fn classify(&self, x: &[f64]) -> i8 {
        match self {
            Classifier::Svm(m) => m.classify(x),
            Classifier::Constant(c) => *c,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_data(features: &[Vec<f64>], labels: &[i8]) -> Result<usize, LearnError> {
    if features.len() != labels.len() {
        return Err(LearnError::Dimension {
            found: labels.len(),
            expected: features.len(),
        });
    }
    let dim = features.first().map_or(0, Vec::len);
    if let Some(row) = features.iter().find(|r| r.len() != dim) {
        return Err(LearnError::Dimension {
            found: row.len(),
            expected: dim,
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LearnError::Config("features must be finite".into()));
    }
    if labels.iter().any(|&h| h != 1 && h != -1) {
        return Err(LearnError::Labels);
    }
    Ok(dim)
}

fn hinge_objective(weights: &[f64], intercept: f64, x: &[Vec<f64>], labels: &[i8], c: f64) -> f64 {
    let s = x.len() as f64;
    let loss: f64 = x
        .iter()
        .zip(labels)
        .map(|(xi, &h)| (1.0 - f64::from(h) * (dot(weights, xi) - intercept)).max(0.0))
        .sum();
    0.5 * dot(weights, weights) + c / s * loss
}

/// Value of the training objective for `model` on raw (unstandardized) data.
pub fn svm_objective(model: &SvmModel, features: &[Vec<f64>], labels: &[i8], c: f64) -> f64 {
    let x: Vec<Vec<f64>> = features.iter().map(|f| model.standardize(f)).collect();
    hinge_objective(&model.weights, model.intercept, &x, labels, c)
}

/// Best `π₀` for fixed `π`: the hinge sum is convex and piecewise linear in
/// `π₀`, so one of its breakpoints is optimal.
fn best_intercept(weights: &[f64], x: &[Vec<f64>], labels: &[i8], c: f64, current: f64) -> f64 {
    let mut best = (hinge_objective(weights, current, x, labels, c), current);
    for (xi, &h) in x.iter().zip(labels) {
        let candidate = dot(weights, xi) - f64::from(h);
        let obj = hinge_objective(weights, candidate, x, labels, c);
        if obj < best.0 {
            best = (obj, candidate);
        }
    }
    best.1
}

/// Trains a linear SVM with penalty `c`. Both labels must be present.
pub fn svm_train(features: &[Vec<f64>], labels: &[i8], c: f64) -> Result<SvmModel, LearnError> {
    let dim = check_data(features, labels)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(LearnError::Config(format!("penalty C = {c}")));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(LearnError::Labels);
    }
    let n = features.len();
    let nf = n as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v / nf;
        }
    }
    let mut scale = vec![0.0; dim];
    for f in features {
        for ((s, v), m) in scale.iter_mut().zip(f).zip(&mean) {
            *s += (v - m) * (v - m) / nf;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let x: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            f.iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();
    let y: Vec<f64> = labels.iter().map(|&h| f64::from(h)).collect();
    let kernel: Vec<Vec<f64>> = x
        .iter()
        .map(|a| x.iter().map(|b| dot(a, b)).collect())
        .collect();
    let upper = c / nf;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, y: f64| (y > 0.0 && a < upper) || (y < 0.0 && a > 0.0);
    let is_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < upper);
    for _ in 0..MAX_SMO_STEPS {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if is_up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                let score = -b * b / if a > 0.0 { a } else { TAU };
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < KKT_TOLERANCE {
            break;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = upper - diff;
                }
            } else if alpha[j] > upper {
                alpha[j] = upper;
                alpha[i] = upper + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > upper {
                if alpha[i] > upper {
                    alpha[i] = upper;
                    alpha[j] = sum - upper;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > upper {
                if alpha[j] > upper {
                    alpha[j] = upper;
                    alpha[i] = sum - upper;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kernel[t][i] * di + y[j] * kernel[t][j] * dj);
        }
    }

    let mut weights = vec![0.0; dim];
    for t in 0..n {
        for (w, v) in weights.iter_mut().zip(&x[t]) {
            *w += alpha[t] * y[t] * v;
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= upper;
        let at_lower = alpha[t] <= 0.0;
        if at_upper && y[t] < 0.0 || at_lower && y[t] > 0.0 {
            ub = ub.min(yg);
        } else if at_upper || at_lower {
            lb = lb.max(yg);
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    };
    let intercept = best_intercept(&weights, &x, labels, c, rho);
    Ok(SvmModel {
        weights,
        intercept,
        mean,
        scale,
    })
}

/// Precision and recall of `predicted` against `actual`, counting label 1 as
/// positive. A ratio with an empty denominator is 1 when the other index set
/// is empty too, 0 otherwise.
pub fn precision_recall(predicted: &[i8], actual: &[i8]) -> Result<(f64, f64), LearnError> {
    if predicted.len() != actual.len() {
        return Err(LearnError::Dimension {
            found: predicted.len(),
            expected: actual.len(),
        });
    }
    let pred_pos = predicted.iter().filter(|&&h| h == 1).count();
    let act_pos = actual.iter().filter(|&&h| h == 1).count();
    let both = predicted
        .iter()
        .zip(actual)
        .filter(|(&p, &a)| p == 1 && a == 1)
        .count();
    let ratio = |num: usize, den: usize, other: usize| {
        if den > 0 {
            num as f64 / den as f64
        } else if other == 0 {
            1.0
        } else {
            0.0
        }
    };
    Ok((ratio(both, pred_pos, act_pos), ratio(both, act_pos, pred_pos)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub precision: f64,
    pub recall: f64,
    /// Trailing samples left out so that the folds have equal size.
    pub dropped: usize,
}

fn train_fold(features: &[Vec<f64>], labels: &[i8], c: f64) -> Result<Classifier, LearnError> {
    let pos = labels.iter().filter(|&&h| h == 1).count();
    if pos == 0 || pos == labels.len() {
        // One class only (majority vote is unanimous).
        let majority = if 2 * pos >= labels.len() { 1 } else { -1 };
        return Ok(Classifier::Constant(majority));
    }
    svm_train(features, labels, c).map(Classifier::Svm)
}

/// `k_cv`-fold cross-validation over contiguous folds. Predictions for every
/// held-out sample are pooled before computing precision and recall.
pub fn kfold_evaluate(
    features: &[Vec<f64>],
    labels: &[i8],
    k_cv: usize,
    c: f64,
) -> Result<CvResult, LearnError> {
    check_data(features, labels)?;
    let s = features.len();
    if k_cv < 2 || k_cv > s {
        return Err(LearnError::BadK {
            k: k_cv,
            available: s,
        });
    }
    let fold = s / k_cv;
    let used = fold * k_cv;
    let mut predicted = Vec::with_capacity(used);
    for i in 0..k_cv {
        let held = i * fold..(i + 1) * fold;
        let (train_x, train_y): (Vec<Vec<f64>>, Vec<i8>) = (0..used)
            .filter(|j| !held.contains(j))
            .map(|j| (features[j].clone(), labels[j]))
            .unzip();
        let model = train_fold(&train_x, &train_y, c)?;
        predicted.extend(held.map(|j| model.classify(&features[j])));
    }
    let (precision, recall) = precision_recall(&predicted, &labels[..used])?;
    Ok(CvResult {
        precision,
        recall,
        dropped: s - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_one_dimensional() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = svm_train(&x, &[-1, 1], 1000.0).unwrap();
        assert_eq!(m.classify(&[-1.0]), -1);
        assert_eq!(m.classify(&[1.0]), 1);
    }

    #[test]
    fn flipping_labels_negates_the_model() {
        let x = vec![
            vec![0.0, 1.0],
            vec![1.0, 0.5],
            vec![2.0, 2.0],
            vec![3.0, 1.5],
            vec![1.5, 1.0],
        ];
        let h = [-1, -1, 1, 1, 1];
        let flipped: Vec<i8> = h.iter().map(|v| -v).collect();
        let a = svm_train(&x, &h, 2.0).unwrap();
        let b = svm_train(&x, &flipped, 2.0).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa + wb).abs() < 1e-4, "{wa} vs {wb}");
        }
        let oa = svm_objective(&a, &x, &h, 2.0);
        let ob = svm_objective(&b, &x, &flipped, 2.0);
        assert!((oa - ob).abs() < 1e-6 * oa.max(1.0));
    }

    #[test]
    fn beats_the_zero_hyperplane() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64).sin(), (i * i % 7) as f64]).collect();
        let h: Vec<i8> = (0..12).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        for c in [0.1, 1.0, 10.0] {
            let m = svm_train(&x, &h, c).unwrap();
            // π = 0, π₀ = 0 leaves every slack at 1.
            assert!(svm_objective(&m, &x, &h, c) <= c + 1e-9);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            svm_train(&[vec![1.0], vec![2.0]], &[1, 1], 1.0),
            Err(LearnError::Labels)
        ));
        assert!(svm_train(&[vec![1.0], vec![2.0]], &[1, 0], 1.0).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        assert_eq!(precision_recall(&[1, 1, -1, -1], &[1, -1, 1, -1]).unwrap(), (0.5, 0.5));
        assert_eq!(precision_recall(&[1, -1, 1], &[1, -1, 1]).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&[-1, -1], &[1, -1]).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall(&[-1, -1], &[-1, -1]).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&[1, -1], &[-1, -1]).unwrap(), (0.0, 0.0));
        assert!(precision_recall(&[1], &[1, 1]).is_err());
    }

    #[test]
    fn separable_cross_validation_is_perfect() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let h: Vec<i8> = (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        // Label by a clear threshold on a feature mixed into the order.
        let x: Vec<Vec<f64>> = x
            .iter()
            .zip(&h)
            .map(|(v, &l)| vec![v[1], f64::from(l) * 5.0 + v[0] * 0.01])
            .collect();
        let cv = kfold_evaluate(&x, &h, 5, 10.0).unwrap();
        assert_eq!((cv.precision, cv.recall, cv.dropped), (1.0, 1.0, 0));
        let cv = kfold_evaluate(&x[..18], &h[..18], 4, 10.0).unwrap();
        assert_eq!(cv.dropped, 2);
    }

    #[test]
    fn single_class_training_fold_uses_constant_model() {
        // Leave-one-out on [+, -, -, -]: the fold holding the only positive
        // sees negatives only and answers -1.
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let cv = kfold_evaluate(&x, &[1, -1, -1, -1], 4, 1.0).unwrap();
        assert_eq!(cv.recall, 0.0);
    }
}
