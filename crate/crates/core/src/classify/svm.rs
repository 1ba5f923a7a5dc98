use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::rng_for;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c_reg: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c_reg: 1.0,
            epochs: 200,
        }
    }
}

/// Linear classifier for one class pair. A nonnegative decision value
/// votes for `class_a`, the smaller id.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryModel {
    pub class_a: usize,
    pub class_b: usize,
    pub w: DVector<f64>,
    pub b: f64,
    /// Primal objective after each epoch.
    pub objective_trace: Vec<f64>,
}

impl BinaryModel {
    pub fn decision(&self, x: &DVector<f64>) -> f64 {
        self.w.dot(x) + self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvmModel {
    classes: Vec<usize>,
    models: Vec<BinaryModel>,
    n_features: usize,
}

impl LinearSvmModel {
    pub fn from_parts(
        classes: Vec<usize>,
        models: Vec<BinaryModel>,
        n_features: usize,
    ) -> Result<Self> {
        let k = classes.len();
        if models.len() != k * (k - 1) / 2 {
            return Err(Error::invalid(format!(
                "{} classes need {} pairwise models",
                k,
                k * (k - 1) / 2
            )));
        }
        if models.iter().any(|m| m.w.len() != n_features) {
            return Err(Error::invalid("pairwise weight vector length mismatch"));
        }
        Ok(Self {
            classes,
            models,
            n_features,
        })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn models(&self) -> &[BinaryModel] {
        &self.models
    }

    /// One-vs-one vote; ties go to the lowest class id.
    pub fn predict(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::invalid(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        Ok(self.vote(self.models.iter().map(|m| m.decision(x))))
    }

    fn vote(&self, decisions: impl Iterator<Item = f64>) -> usize {
        let mut votes = vec![0usize; self.classes.len()];
        for (m, d) in self.models.iter().zip(decisions) {
            let winner = if d >= 0.0 { m.class_a } else { m.class_b };
            let pos = self
                .classes
                .binary_search(&winner)
                .expect("model class is known");
            votes[pos] += 1;
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        self.classes[votes.iter().position(|&v| v == best).unwrap_or(0)]
    }

    /// Predicts every column of `x`.
    pub fn predict_columns(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        (0..x.ncols())
            .map(|c| self.predict(&x.column(c).into_owned()))
            .collect()
    }
}

/// Trains one binary SVM per class pair on the columns of `x`.
///
/// Each pair minimises `0.5 |w|^2 + c_reg * sum hinge` (bias appended as a
/// constant feature) by Pegasos stochastic subgradient steps with
/// `lambda = 1 / (c_reg * n)` and step `1 / (lambda * t)`. The iterate
/// with the lowest objective seen at an epoch boundary is kept.
pub fn train_linear_svm_ovo(
    x: &DMatrix<f64>,
    labels: &[usize],
    params: &SvmParams,
    seed: u64,
) -> Result<LinearSvmModel> {
    if labels.len() != x.ncols() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            x.ncols()
        )));
    }
    if !(params.c_reg > 0.0 && params.c_reg.is_finite()) {
        return Err(Error::invalid(format!(
            "c_reg must be positive, got {}",
            params.c_reg
        )));
    }
    if params.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes to train"));
    }
    let mut pairs = Vec::new();
    for (a_pos, &a) in classes.iter().enumerate() {
        for &b in &classes[a_pos + 1..] {
            pairs.push((a, b));
        }
    }
    let models = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| train_pair(x, labels, a, b, params, seed, k as u64))
        .collect();
    LinearSvmModel::from_parts(classes, models, x.nrows())
}

fn train_pair(
    x: &DMatrix<f64>,
    labels: &[usize],
    a: usize,
    b: usize,
    params: &SvmParams,
    seed: u64,
    pair: u64,
) -> BinaryModel {
    let cols: Vec<usize> = (0..labels.len())
        .filter(|&c| labels[c] == a || labels[c] == b)
        .collect();
    let d = x.nrows();
    // augmented samples [x; 1] with targets +1 for a, -1 for b
    let aug: Vec<DVector<f64>> = cols
        .iter()
        .map(|&c| DVector::from_fn(d + 1, |r, _| if r < d { x[(r, c)] } else { 1.0 }))
        .collect();
    let y: Vec<f64> = cols
        .iter()
        .map(|&c| if labels[c] == a { 1.0 } else { -1.0 })
        .collect();
    let n = aug.len();
    let lambda = 1.0 / (params.c_reg * n as f64);

    let objective = |w: &DVector<f64>| {
        let hinge: f64 = aug
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (1.0 - yi * w.dot(xi)).max(0.0))
            .sum();
        0.5 * w.norm_squared() + params.c_reg * hinge
    };

    let mut rng = rng_for(seed, "svm-pair", pair);
    let mut w = DVector::zeros(d + 1);
    let mut best_w = w.clone();
    let mut best_obj = objective(&w);
    let mut trace = Vec::with_capacity(params.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * w.dot(&aug[i]);
            w *= 1.0 - eta * lambda;
            if margin < 1.0 {
                w.axpy(eta * y[i], &aug[i], 1.0);
            }
        }
        let obj = objective(&w);
        if obj < best_obj {
            best_obj = obj;
            best_w.copy_from(&w);
        }
        trace.push(best_obj);
    }
    BinaryModel {
        class_a: a,
        class_b: b,
        w: best_w.rows(0, d).into_owned(),
        b: best_w[d],
        objective_trace: trace,
    }
}
