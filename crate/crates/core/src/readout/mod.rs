//! Trained linear output layer.
//!
//! Two objectives share one model type:
//!
//! * classifier: one-vs-all sigmoid with binary cross-entropy (or softmax
//!   cross-entropy), `mean_i sum_c BCE(sigmoid(z_ic), y_ic) + l2/2 |W|^2`;
//! * regressor: `(1/n) (sum_i r_i^2 + l2 |w|^2)`, whose minimizer is the
//!   ridge solution `(X^T X + l2 I)^-1 X^T y` with an unpenalized bias.

mod linalg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::tasks::SeededRng;

pub use linalg::cholesky_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    Classifier,
    Regressor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierLoss {
    #[default]
    OneVsAllSigmoid,
    Softmax,
}

/// Linear map `z = W^T f + b`; `weights` is `n_features x n_outputs`,
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub kind: ReadoutKind,
    pub n_features: usize,
    pub n_outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(default)]
    pub feature_meta: Vec<String>,
}

impl ReadoutModel {
    pub fn zeros(kind: ReadoutKind, n_features: usize, n_outputs: usize) -> Self {
        Self {
            kind,
            n_features,
            n_outputs,
            weights: vec![0.0; n_features * n_outputs],
            bias: vec![0.0; n_outputs],
            feature_meta: Vec::new(),
        }
    }

    pub fn weight(&self, feature: usize, output: usize) -> f64 {
        self.weights[feature * self.n_outputs + output]
    }

    fn check_features(&self, x: &FeatureMatrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Raw outputs, `rows x n_outputs` row-major.
    pub fn logits(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_features(x)?;
        let c = self.n_outputs;
        let mut out = Vec::with_capacity(x.rows() * c);
        for i in 0..x.rows() {
            let mut z = self.bias.clone();
            for (j, &f) in x.row(i).iter().enumerate() {
                if f != 0.0 {
                    let w = &self.weights[j * c..(j + 1) * c];
                    for k in 0..c {
                        z[k] += f * w[k];
                    }
                }
            }
            out.extend(z);
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` trains on the full batch.
    pub batch_size: Option<usize>,
    pub l2: f64,
    pub seed: u64,
    #[serde(default)]
    pub loss: ClassifierLoss,
}

impl TrainHyper {
    pub fn classifier_default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: Some(64),
            l2: 0.0,
            seed: 0,
            loss: ClassifierLoss::OneVsAllSigmoid,
        }
    }

    pub fn regressor_default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: None,
            l2: 1e-6,
            seed: 0,
            loss: ClassifierLoss::OneVsAllSigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate must be positive".to_string());
        }
        if self.epochs == 0 {
            problems.push("epochs must be at least 1".to_string());
        }
        if self.batch_size == Some(0) {
            problems.push("batch_size must be at least 1".to_string());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            problems.push("l2 must be non-negative".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }
}

/// Targets matching a model kind.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Labels(&'a [u8]),
    Values(&'a [f64]),
}

impl Targets<'_> {
    fn len(&self) -> usize {
        match self {
            Targets::Labels(l) => l.len(),
            Targets::Values(v) => v.len(),
        }
    }
}

/// Analytic gradient of an objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.bias)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective value and gradient of `model` on rows `idx` of `x`.
fn objective(
    model: &ReadoutModel,
    x: &FeatureMatrix,
    targets: Targets<'_>,
    idx: &[usize],
    l2: f64,
    loss: ClassifierLoss,
) -> (f64, Gradient) {
    let c = model.n_outputs;
    let f = model.n_features;
    let n = idx.len() as f64;
    let mut gw = vec![0.0; f * c];
    let mut gb = vec![0.0; c];
    let mut value = 0.0;
    let mut z = vec![0.0; c];
    let mut dz = vec![0.0; c];
    for &i in idx {
        let row = x.row(i);
        z.copy_from_slice(&model.bias);
        for (j, &fv) in row.iter().enumerate() {
            if fv != 0.0 {
                let w = &model.weights[j * c..(j + 1) * c];
                for k in 0..c {
                    z[k] += fv * w[k];
                }
            }
        }
        match (model.kind, targets) {
            (ReadoutKind::Classifier, Targets::Labels(labels)) => {
                let label = labels[i] as usize;
                match loss {
                    ClassifierLoss::OneVsAllSigmoid => {
                        for k in 0..c {
                            let y = if k == label { 1.0 } else { 0.0 };
                            // BCE(sigmoid(z), y) = softplus(z) - y z
                            value += softplus(z[k]) - y * z[k];
                            dz[k] = sigmoid(z[k]) - y;
                        }
                    }
                    ClassifierLoss::Softmax => {
                        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
                        let lse = m + s.ln();
                        value += lse - z[label];
                        for k in 0..c {
                            dz[k] = (z[k] - lse).exp() - if k == label { 1.0 } else { 0.0 };
                        }
                    }
                }
            }
            (ReadoutKind::Regressor, Targets::Values(y)) => {
                let r = z[0] - y[i];
                value += r * r;
                dz[0] = 2.0 * r;
            }
            _ => unreachable!("targets checked against model kind"),
        }
        for (j, &fv) in row.iter().enumerate() {
            if fv != 0.0 {
                let g = &mut gw[j * c..(j + 1) * c];
                for k in 0..c {
                    g[k] += fv * dz[k];
                }
            }
        }
        for k in 0..c {
            gb[k] += dz[k];
        }
    }
    for g in gw.iter_mut().chain(gb.iter_mut()) {
        *g /= n;
    }
    value /= n;
    let w2: f64 = model.weights.iter().map(|w| w * w).sum();
    match model.kind {
        ReadoutKind::Classifier => {
            value += 0.5 * l2 * w2;
            for (g, w) in gw.iter_mut().zip(&model.weights) {
                *g += l2 * w;
            }
        }
        ReadoutKind::Regressor => {
            value += l2 * w2 / n;
            for (g, w) in gw.iter_mut().zip(&model.weights) {
                *g += 2.0 * l2 * w / n;
            }
        }
    }
    (
        value,
        Gradient {
            weights: gw,
            bias: gb,
        },
    )
}

fn check_targets(model: &ReadoutModel, x: &FeatureMatrix, targets: Targets<'_>) -> Result<()> {
    model.check_features(x)?;
    if targets.len() != x.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} rows",
            targets.len(),
            x.rows()
        )));
    }
    match (model.kind, targets) {
        (ReadoutKind::Classifier, Targets::Labels(l)) => {
            if let Some(&bad) = l.iter().find(|&&v| v as usize >= model.n_outputs) {
                return Err(Error::ShapeMismatch(format!(
                    "label {bad} for a {}-class model",
                    model.n_outputs
                )));
            }
            Ok(())
        }
        (ReadoutKind::Regressor, Targets::Values(_)) => Ok(()),
        _ => Err(Error::ShapeMismatch("targets do not match model kind".into())),
    }
}

/// Objective value over all rows.
pub fn loss(
    model: &ReadoutModel,
    x: &FeatureMatrix,
    targets: Targets<'_>,
    l2: f64,
    kind: ClassifierLoss,
) -> Result<f64> {
    check_targets(model, x, targets)?;
    let idx: Vec<usize> = (0..x.rows()).collect();
    Ok(objective(model, x, targets, &idx, l2, kind).0)
}

/// Analytic gradient of the objective over all rows.
pub fn loss_gradient(
    model: &ReadoutModel,
    x: &FeatureMatrix,
    targets: Targets<'_>,
    l2: f64,
    kind: ClassifierLoss,
) -> Result<Gradient> {
    check_targets(model, x, targets)?;
    let idx: Vec<usize> = (0..x.rows()).collect();
    Ok(objective(model, x, targets, &idx, l2, kind).1)
}

/// A trained model plus its objective before and after training.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: ReadoutModel,
    pub initial_loss: f64,
    pub final_loss: f64,
}

fn train_gd(mut model: ReadoutModel, x: &FeatureMatrix, targets: Targets<'_>, hyper: &TrainHyper) -> Result<Trained> {
    hyper.validate()?;
    check_targets(&model, x, targets)?;
    let n = x.rows();
    if n == 0 {
        return Err(Error::ShapeMismatch("no training rows".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let initial_loss = objective(&model, x, targets, &all, hyper.l2, hyper.loss).0;
    let batch = hyper.batch_size.unwrap_or(n).min(n);
    let mut rng = SeededRng::new(hyper.seed);
    let mut order = all.clone();
    for epoch in 0..hyper.epochs {
        if batch < n {
            rng.shuffle(&mut order);
        }
        for chunk in order.chunks(batch) {
            let (_, g) = objective(&model, x, targets, chunk, hyper.l2, hyper.loss);
            for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
                *w -= hyper.learning_rate * gw;
            }
            for (b, gb) in model.bias.iter_mut().zip(&g.bias) {
                *b -= hyper.learning_rate * gb;
            }
        }
        if !model.is_finite() {
            return Err(Error::NonFinite(format!(
                "weights left the finite range in epoch {epoch}; lower the learning rate"
            )));
        }
    }
    let final_loss = objective(&model, x, targets, &all, hyper.l2, hyper.loss).0;
    if !final_loss.is_finite() {
        return Err(Error::NonFinite(format!("final loss {final_loss}")));
    }
    Ok(Trained {
        model,
        initial_loss,
        final_loss,
    })
}

pub const N_CLASSES: usize = 10;

/// Mini-batch gradient descent on the classification objective, starting
/// from zero weights.
pub fn train_classifier_gd(x: &FeatureMatrix, labels: &[u8], hyper: &TrainHyper) -> Result<Trained> {
    let mut model = ReadoutModel::zeros(ReadoutKind::Classifier, x.cols(), N_CLASSES);
    model.feature_meta = x.col_meta().to_vec();
    train_gd(model, x, Targets::Labels(labels), hyper)
}

/// Gradient descent on the regression objective, starting from zero weights.
pub fn train_regressor_gd(x: &FeatureMatrix, y: &[f64], hyper: &TrainHyper) -> Result<Trained> {
    if x.rows() <= x.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows cannot determine {} weights and a bias",
            x.rows(),
            x.cols()
        )));
    }
    let mut model = ReadoutModel::zeros(ReadoutKind::Regressor, x.cols(), 1);
    model.feature_meta = x.col_meta().to_vec();
    train_gd(model, x, Targets::Values(y), hyper)
}

/// Exact minimizer of the regression objective via the normal equations.
pub fn solve_least_squares(x: &FeatureMatrix, y: &[f64], l2: f64) -> Result<ReadoutModel> {
    if y.len() != x.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} rows",
            y.len(),
            x.rows()
        )));
    }
    let f = x.cols();
    let m = f + 1;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    let mut row = vec![0.0; m];
    for i in 0..x.rows() {
        row[..f].copy_from_slice(x.row(i));
        row[f] = 1.0;
        for p in 0..m {
            b[p] += row[p] * y[i];
            for q in 0..=p {
                a[p * m + q] += row[p] * row[q];
            }
        }
    }
    for p in 0..m {
        for q in 0..p {
            a[q * m + p] = a[p * m + q];
        }
    }
    for p in 0..f {
        a[p * m + p] += l2;
    }
    let sol = cholesky_solve(&a, &b, m)?;
    let mut model = ReadoutModel::zeros(ReadoutKind::Regressor, f, 1);
    model.weights.copy_from_slice(&sol[..f]);
    model.bias[0] = sol[f];
    model.feature_meta = x.col_meta().to_vec();
    Ok(model)
}

/// Argmax over the class outputs; ties go to the smaller digit.
pub fn predict_class(model: &ReadoutModel, x: &FeatureMatrix) -> Result<Vec<u8>> {
    if model.kind != ReadoutKind::Classifier {
        return Err(Error::ShapeMismatch("predict_class needs a classifier".into()));
    }
    let z = model.logits(x)?;
    Ok(z.chunks(model.n_outputs).map(argmax).collect())
}

fn argmax(z: &[f64]) -> u8 {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = k;
        }
    }
    best as u8
}

/// `y_hat(k) = sum_i w_i f_i(k) + b`.
pub fn predict_series(model: &ReadoutModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if model.kind != ReadoutKind::Regressor {
        return Err(Error::ShapeMismatch("predict_series needs a regressor".into()));
    }
    model.logits(x)
}

/// Per-column affine rescaling to zero mean and unit variance, fitted on
/// training features and folded back into raw-space weights after training.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // constant columns keep unit scale so they map to zero
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> FeatureMatrix {
        let values = x
            .values()
            .chunks(x.cols().max(1))
            .flat_map(|row| {
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) / s)
            })
            .collect();
        FeatureMatrix::new(x.rows(), x.cols(), values, x.col_meta().to_vec())
            .expect("affine map keeps shape and finiteness")
    }

    /// Raw-space model equivalent to `model` applied after [`Self::apply`].
    pub fn fold(&self, model: &ReadoutModel) -> ReadoutModel {
        let c = model.n_outputs;
        let mut out = model.clone();
        for j in 0..model.n_features {
            for k in 0..c {
                let w = model.weights[j * c + k] / self.scale[j];
                out.weights[j * c + k] = w;
                out.bias[k] -= w * self.mean[j];
            }
        }
        out
    }
}
